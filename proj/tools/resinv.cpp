#include "resinv/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return resinv::dispatch(argc, argv, std::cout, std::cerr); }
