#include "subtok/cli.hpp"

int main(int argc, char** argv) { return subtok::cli::run(argc, argv); }
