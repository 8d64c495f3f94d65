#include "sepx/report.hpp"

int main(int argc, char** argv) { return sepx::run_command(argc, argv); }
