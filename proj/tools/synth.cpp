// Writes the synthetic train/valid/test corpora and the figure example.
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "wgsum/synthetic.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: wgsum-synth OUT_DIR\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);
  try {
    wgsum::save_corpus(dir / "train.jsonl", wgsum::synthetic_corpus(32, 7, "train"));
    wgsum::save_corpus(dir / "valid.jsonl", wgsum::synthetic_corpus(16, 11, "valid"));
    wgsum::save_corpus(dir / "test.jsonl", wgsum::synthetic_corpus(16, 13, "test"));
    const wgsum::Report fig = wgsum::figure_example();
    wgsum::save_corpus(dir / "figure.jsonl", std::span<const wgsum::Report>(&fig, 1));
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
  std::cout << "wrote corpora to " << dir.string() << "\n";
  return 0;
}
