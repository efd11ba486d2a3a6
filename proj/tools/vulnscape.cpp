#include <iostream>

#include "vulnscape/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return vulnscape::cli::run(args, std::cout, std::cerr);
}
