#include "trapcalc_cli.hpp"

int main(int argc, char** argv) { return trapcalc::cli::run(argc, argv); }
