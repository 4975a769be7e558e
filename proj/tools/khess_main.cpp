#include "khess/commands.hpp"

int main(int argc, char** argv) { return khess::cli_main(argc, argv); }
