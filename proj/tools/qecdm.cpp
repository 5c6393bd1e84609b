#include "qecdm/cli.hpp"

int main(int argc, char** argv) { return qecdm::run_cli(argc, argv); }
