#include "filmrestore/cli.hpp"

int main(int argc, char** argv) { return filmrestore::run_cli(argc, argv); }
