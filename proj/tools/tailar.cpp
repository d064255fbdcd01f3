#include <iostream>
#include <string>
#include <vector>

#include "tailar/cli.hpp"

int main(int argc, char** argv) {
    return tailar::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
