#include "stripefrac/cli.hpp"

int main(int argc, char** argv) { return stripefrac::run_cli(argc, argv); }
