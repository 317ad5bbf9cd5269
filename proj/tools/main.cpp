#include "commands.hpp"

int main(int argc, char** argv) { return invbo::cli::main(argc, argv); }
