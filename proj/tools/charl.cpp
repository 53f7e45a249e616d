#include "charl/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return charl::cli::dispatch({argv + 1, argv + argc}, std::cout, std::cerr);
}
