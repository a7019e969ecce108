#include "lps/cli.hpp"

int main(int argc, char** argv) { return lps::run_cli(argc, argv); }
