#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return scene_cluster::cli::run(argc, argv, std::cout, std::cerr); }
