#include "dyngame/cli.hpp"

int main(int argc, char** argv) { return dyngame::cli_main(argc, argv); }
