// Writes a deterministic synthetic trace file for the given languages.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "subtok/manifest.hpp"
#include "subtok/synthetic.hpp"
#include "subtok/trace_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic trace bundle"};
  std::string manifest_path, out_path, languages;
  subtok::synthetic::Options opt;
  app.add_option("--manifest", manifest_path, "Manifest providing training hours")->required();
  app.add_option("--languages", languages, "Comma-separated codes (default: all in manifest)");
  app.add_option("--utterances", opt.utterances, "Utterances per language")->capture_default_str();
  app.add_option("--k-cand", opt.k_cand, "Candidates per step")->capture_default_str();
  app.add_option("--seed", opt.seed, "Random seed")->capture_default_str();
  app.add_option("--out", out_path, "Output trace file")->required();
  CLI11_PARSE(app, argc, argv);

  try {
    const auto manifest = subtok::load_manifest(manifest_path);
    std::vector<std::string> codes;
    if (languages.empty()) {
      for (const auto& e : manifest.entries()) codes.push_back(e.code);
    } else {
      std::stringstream ss(languages);
      for (std::string c; std::getline(ss, c, ',');) codes.push_back(c);
    }
    std::vector<subtok::UtteranceTrace> all;
    for (const auto& code : codes) {
      auto traces = subtok::synthetic::generate_language(code, manifest.at(code).training_hours, opt);
      all.insert(all.end(), traces.begin(), traces.end());
    }
    subtok::write_traces(all, out_path);
    std::cout << "wrote " << all.size() << " utterances to " << out_path << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
