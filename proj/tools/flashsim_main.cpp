#include <iostream>
#include <string>
#include <vector>

#include "flashsim/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return flashsim::cli::run(std::move(args), std::cout, std::cerr);
}
