#include "apkvis/cli.hpp"

int main(int argc, char** argv)
{
    return apkvis::cli::run(argc, argv);
}
