#include "smtw/runner.hpp"

int main(int argc, char** argv) { return smtw::run_cli(argc, argv); }
