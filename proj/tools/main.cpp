#include "cli.hpp"

int main(int argc, char** argv) { return wordalise::cli::main(argc, argv); }
