#include <iostream>

#include "ordsbm/cli.hh"

int main(int argc, char** argv)
{
    return ordsbm::cli::run(argc, argv, std::cout, std::cerr);
}
