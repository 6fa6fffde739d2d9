#include "wtank/cli.hpp"

int main(int argc, char** argv) { return wtank::run_cli(argc, argv); }
