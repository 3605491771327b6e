// Writes a synthetic FER2013-format CSV for desk-scale runs without the real
// dataset.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ocfer/data.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic FER2013-format CSV"};
    std::string out;
    std::size_t train_per_class = 300;
    std::size_t test_per_class = 100;
    std::uint64_t seed = 0;
    app.add_option("--out", out, "Output CSV path")->required();
    app.add_option("--train-per-class", train_per_class, "Training rows per label")->capture_default_str();
    app.add_option("--test-per-class", test_per_class, "PublicTest and PrivateTest rows per label")
        ->capture_default_str();
    app.add_option("--seed", seed, "Generator seed")->capture_default_str();
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    try {
        ocfer::write_fer_csv(ocfer::synthesize_fer(train_per_class, test_per_class, seed), out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cout << "wrote " << 7 * (train_per_class + 2 * test_per_class) << " rows to " << out << "\n";
    return 0;
}
