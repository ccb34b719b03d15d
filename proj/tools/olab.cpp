#include <iostream>

#include "olab/cli.hpp"

int main(int argc, char** argv) { return olab::dispatch(argc, argv, std::cout, std::cerr); }
