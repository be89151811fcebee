#include "advseg/cli/commands.hpp"

int main(int argc, char** argv) { return advseg::cli::run(argc, argv); }
