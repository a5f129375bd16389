#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "subtok/alignment.hpp"
#include "subtok/embedding.hpp"
#include "subtok/manifest.hpp"
#include "subtok/metrics.hpp"
#include "subtok/report.hpp"
#include "subtok/stats.hpp"
#include "subtok/trace_io.hpp"
#include "subtok/tsne.hpp"
#include "subtok/types.hpp"
#include "subtok/version.hpp"
#include "subtok/vocab.hpp"

namespace subtok {

struct PipelineConfig {
  AnalysisConfig analysis;
  std::size_t n_permutations = 10000;
  TsneOptions tsne;  // tsne.seed is overridden by analysis.seed
  FrequencyScale scale = FrequencyScale::Relative;
  std::string coverage_language;  // empty: no coverage.csv
  double coverage_window_sec = 600.0;
  std::filesystem::path vocab_path;
};

struct PipelineReport {
  std::vector<std::string> errors;
  std::vector<std::string> outputs;
  int exit_code() const { return errors.empty() ? 0 : 1; }
};

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 unavailable");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

struct LanguageOutcome {
  std::optional<LanguageMetrics> metrics;
  std::string error;
};

// Full analysis: metrics, correlation statistics, PCA and t-SNE coordinates,
// an optional coverage curve, and a run manifest. Languages are processed
// concurrently; output order is alphabetical by language code. Failures are
// collected in the report and everything that could be computed is written.
inline PipelineReport run_pipeline(const std::filesystem::path& traces_path,
                                   const std::filesystem::path& manifest_path, const PipelineConfig& config,
                                   const std::filesystem::path& out_dir) {
  PipelineReport report;
  std::filesystem::create_directories(out_dir);
  auto emit = [&](const std::string& name, const std::string& content) {
    write_file(out_dir / name, content);
    report.outputs.push_back(name);
  };

  config.analysis.validate();
  const LanguageManifest manifest = load_manifest(manifest_path);
  Vocabulary vocab;
  if (!config.vocab_path.empty()) vocab = load_vocabulary(config.vocab_path);
  const TokenFilter filter = TokenFilter::from(config.analysis);

  std::vector<TraceError> trace_errors;
  auto traces = read_traces_lenient(traces_path, trace_errors, config.analysis.vocab_size);
  for (const auto& e : trace_errors) report.errors.push_back(std::string("traces: ") + e.what());

  TracesByLanguage by_language;
  for (auto& t : traces) by_language[t.language].push_back(std::move(t));

  std::map<std::string, std::future<LanguageOutcome>> jobs;
  for (const auto& entry : by_language) {
    const auto& lang_traces = entry.second;
    jobs[entry.first] = std::async(std::launch::async, [&config, &vocab, &lang_traces] {
      LanguageOutcome out;
      try {
        std::vector<AlignmentResult> alignments;
        alignments.reserve(lang_traces.size());
        for (const auto& t : lang_traces) alignments.push_back(rank_reference_tokens(t, config.analysis));
        out.metrics = language_metrics(lang_traces, alignments, config.analysis, &vocab);
      } catch (const std::exception& e) {
        out.error = e.what();
      }
      return out;
    });
  }

  std::vector<LanguageMetrics> rows;
  TracesByLanguage usable;
  for (auto& [code, job] : jobs) {
    auto outcome = job.get();
    if (!outcome.metrics) {
      report.errors.push_back("language " + code + ": " + outcome.error);
      continue;
    }
    if (!manifest.find(code)) report.errors.push_back("language " + code + ": not in manifest");
    rows.push_back(*outcome.metrics);
    usable[code] = by_language[code];
  }

  std::ostringstream metrics_csv;
  write_metrics_csv(metrics_csv, rows, manifest);
  emit("metrics.csv", metrics_csv.str());

  std::map<std::string, std::map<std::string, double>> columns;
  for (const auto& m : rows)
    for (const auto& name : correlated_metric_names()) columns[name][m.language] = metric_value(m, name);
  std::ostringstream stats_csv;
  write_stats_csv(stats_csv, columns, manifest, config.n_permutations, config.analysis.seed);
  emit("stats.csv", stats_csv.str());

  EmbeddingCsvInfo info{config.analysis.k_pca, config.scale, 0, config.tsne.perplexity};
  std::optional<FrequencyMatrix> freq;
  std::optional<StandardizedMatrix> standardized;
  std::string embed_skip;
  try {
    freq = build_frequency_matrix(usable, config.analysis.k_pca, config.scale, filter);
    standardized = standardize(freq->values);
    info.n_columns = standardized->kept_columns.size();
  } catch (const std::invalid_argument& e) {
    embed_skip = e.what();
  }
  auto embed = [&](const char* name, auto&& method) {
    std::ostringstream os;
    try {
      if (!standardized) throw std::invalid_argument(embed_skip);
      write_embedding_csv(os, freq->languages, method(standardized->values), info);
    } catch (const std::invalid_argument& e) {
      os.str("");
      os << "# skipped: " << e.what() << "\nlanguage,dim1,dim2\n";
    }
    emit(name, os.str());
  };
  embed("pca.csv", [](const Eigen::MatrixXd& x) { return pca_2d(x); });
  TsneOptions tsne = config.tsne;
  tsne.seed = config.analysis.seed;
  embed("tsne.csv", [&tsne](const Eigen::MatrixXd& x) { return tsne_2d(x, tsne); });

  if (!config.coverage_language.empty()) {
    std::ostringstream os;
    auto it = usable.find(config.coverage_language);
    if (it == usable.end()) {
      report.errors.push_back("coverage: no usable traces for language " + config.coverage_language);
    } else {
      write_coverage_csv(os, coverage_curve(it->second, config.coverage_window_sec, filter));
      emit("coverage.csv", os.str());
    }
  }

  nlohmann::ordered_json run;
  run["tool"] = "subtok";
  run["version"] = kVersion;
  run["seed"] = config.analysis.seed;
  run["config"] = {
      {"k_cand", config.analysis.k_cand},
      {"k_entropy", config.analysis.k_entropy},
      {"k_diversity", config.analysis.k_diversity},
      {"k_pca", config.analysis.k_pca},
      {"include_special_tokens", config.analysis.include_special_tokens},
      {"normalize_wer_text", config.analysis.normalize_wer_text},
      {"vocab_size", config.analysis.vocab_size},
      {"special_token_begin", config.analysis.special_token_begin},
      {"n_permutations", config.n_permutations},
      {"frequency_scale", config.scale == FrequencyScale::Relative ? "relative" : "counts"},
      {"tsne",
       {{"perplexity", tsne.perplexity},
        {"iterations", tsne.iterations},
        {"exaggeration", tsne.exaggeration},
        {"exaggeration_iterations", tsne.exaggeration_iterations},
        {"learning_rate", tsne.learning_rate},
        {"momentum_initial", tsne.momentum_initial},
        {"momentum_final", tsne.momentum_final},
        {"init", tsne.init == TsneInit::Pca ? "pca" : "random"}}},
      {"coverage_language", config.coverage_language},
      {"coverage_window_sec", config.coverage_window_sec},
  };
  auto input = [](const std::filesystem::path& p) {
    return nlohmann::ordered_json{{"path", p.string()}, {"sha256", sha256_file(p)}};
  };
  run["inputs"]["traces"] = input(traces_path);
  run["inputs"]["manifest"] = input(manifest_path);
  if (!config.vocab_path.empty()) run["inputs"]["vocabulary"] = input(config.vocab_path);
  run["outputs"] = report.outputs;
  run["errors"] = report.errors;
  write_file(out_dir / "run_manifest.json", run.dump(2) + "\n");
  return report;
}

}  // namespace subtok
