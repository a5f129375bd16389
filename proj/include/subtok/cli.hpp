#pragma once

#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "subtok/alignment.hpp"
#include "subtok/embedding.hpp"
#include "subtok/manifest.hpp"
#include "subtok/metrics.hpp"
#include "subtok/pipeline.hpp"
#include "subtok/report.hpp"
#include "subtok/trace_io.hpp"
#include "subtok/tsne.hpp"
#include "subtok/version.hpp"
#include "subtok/vocab.hpp"

namespace subtok::cli {

struct Globals {
  std::string traces;
  std::string manifest;
  std::string vocab;
  std::string out_dir = "subtok-out";
  AnalysisConfig analysis;
};

inline void require_path(const std::string& value, const char* flag) {
  if (value.empty()) throw CLI::ValidationError(flag, "is required for this subcommand");
}

inline void emit(const std::string& out, const std::string& content, std::ostream& stdout_stream) {
  if (out.empty() || out == "-") {
    stdout_stream << content;
  } else {
    write_file(out, content);
  }
}

// Entry point of the `subtok` tool. Returns the process exit code:
// 0 success, 1 analysis or input failure, 2 usage error.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Sub-token level analysis of multilingual ASR beam-search traces", "subtok"};
  app.set_version_flag("--version", std::string("subtok ") + kVersion);
  app.set_config("--config", "", "Flat key=value file with option values; command-line flags take precedence");
  app.require_subcommand(1);

  Globals g;
  AnalysisConfig& a = g.analysis;
  app.add_option("--traces", g.traces, "Trace file (one JSON record per line)");
  app.add_option("--manifest", g.manifest, "Language manifest CSV (code,training_hours[,tier])");
  app.add_option("--vocab", g.vocab, "Vocabulary TSV (token_id<TAB>token_string)");
  app.add_option("--out-dir", g.out_dir, "Output directory for `run`")->capture_default_str();
  app.add_option("--seed", a.seed, "Random seed")->capture_default_str();
  app.add_option("--k-cand", a.k_cand, "Recorded candidate depth")->capture_default_str();
  app.add_option("--k-entropy", a.k_entropy, "Candidates used for entropy")->capture_default_str();
  app.add_option("--k-diversity", a.k_diversity, "Candidates used for diversity")->capture_default_str();
  app.add_option("--k-pca", a.k_pca, "Candidates used for frequency vectors")->capture_default_str();
  app.add_option("--include-special-tokens", a.include_special_tokens,
                 "Count special tokens (BOS/EOS/language/timestamps) in token-level metrics")
      ->capture_default_str();
  app.add_option("--normalize-wer", a.normalize_wer_text, "Normalize text before WER")->capture_default_str();
  app.add_option("--vocab-size", a.vocab_size, "Vocabulary size used to validate token ids")->capture_default_str();

  std::string out_path;

  auto* metrics = app.add_subcommand("metrics", "Per-language metrics CSV");
  metrics->add_option("--out", out_path, "Output CSV ('-' for stdout)");

  std::string align_trace, utterance;
  auto* align_cmd = app.add_subcommand("align", "Print the alignment table of one utterance");
  align_cmd->add_option("--trace", align_trace, "Trace file (defaults to --traces)");
  align_cmd->add_option("--utterance", utterance, "Utterance id")->required();

  std::string method = "pca", scale = "relative";
  std::optional<std::size_t> k_override;
  TsneOptions tsne;
  auto* embed = app.add_subcommand("embed", "PCA or t-SNE coordinates of per-language frequency vectors");
  embed->add_option("--method", method, "pca or tsne")
      ->check(CLI::IsMember({"pca", "tsne"}))
      ->capture_default_str();
  embed->add_option("--k", k_override, "Candidates per step used for frequency vectors (overrides --k-pca)");
  embed->add_option("--perplexity", tsne.perplexity, "t-SNE perplexity")->capture_default_str();
  embed->add_option("--iterations", tsne.iterations, "t-SNE iterations")->capture_default_str();
  embed->add_option("--scale", scale, "relative or counts")
      ->check(CLI::IsMember({"relative", "counts"}))
      ->capture_default_str();
  embed->add_option("--out", out_path, "Output CSV ('-' for stdout)");

  std::string metrics_path;
  std::size_t permutations = 10000;
  auto* correlate_cmd = app.add_subcommand("correlate", "Metric vs. training-hours correlation statistics");
  correlate_cmd->add_option("--metrics", metrics_path, "Metrics CSV written by `metrics`")->required();
  correlate_cmd->add_option("--permutations", permutations, "Permutations for the p-value")->capture_default_str();
  correlate_cmd->add_option("--out", out_path, "Output CSV ('-' for stdout)");

  std::string language;
  double window_sec = 600.0;
  auto* coverage = app.add_subcommand("coverage", "Cumulative unique-token coverage curve of one language");
  coverage->add_option("--language", language, "Language code")->required();
  coverage->add_option("--window-sec", window_sec, "Window length in seconds")->capture_default_str();
  coverage->add_option("--out", out_path, "Output CSV ('-' for stdout)");

  PipelineConfig pipeline;
  auto* run_cmd = app.add_subcommand("run", "Full pipeline: metrics, stats, PCA, t-SNE, coverage, run manifest");
  run_cmd->add_option("--permutations", pipeline.n_permutations, "Permutations for the p-values")
      ->capture_default_str();
  run_cmd->add_option("--perplexity", pipeline.tsne.perplexity, "t-SNE perplexity")->capture_default_str();
  run_cmd->add_option("--coverage-language", pipeline.coverage_language, "Also write coverage.csv for this language");
  run_cmd->add_option("--window-sec", pipeline.coverage_window_sec, "Coverage window in seconds")
      ->capture_default_str();

  for (auto* sub : {metrics, align_cmd, embed, correlate_cmd, coverage, run_cmd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    a.validate();
    const TokenFilter filter = TokenFilter::from(a);

    if (metrics->parsed()) {
      require_path(g.traces, "--traces");
      require_path(g.manifest, "--manifest");
      const auto manifest = load_manifest(g.manifest);
      Vocabulary vocab;
      if (!g.vocab.empty()) vocab = load_vocabulary(g.vocab);
      TracesByLanguage by_language;
      for (auto& t : read_traces(g.traces, a.vocab_size)) by_language[t.language].push_back(std::move(t));
      std::vector<LanguageMetrics> rows;
      for (const auto& [code, traces] : by_language) {
        std::vector<AlignmentResult> alignments;
        for (const auto& t : traces) alignments.push_back(rank_reference_tokens(t, a));
        rows.push_back(language_metrics(traces, alignments, a, &vocab));
      }
      std::ostringstream os;
      write_metrics_csv(os, rows, manifest);
      emit(out_path, os.str(), out);
      return 0;
    }

    if (align_cmd->parsed()) {
      const std::string path = align_trace.empty() ? g.traces : align_trace;
      require_path(path, "--trace");
      Vocabulary vocab;
      if (!g.vocab.empty()) vocab = load_vocabulary(g.vocab);
      TraceReader reader(path, a.vocab_size);
      while (auto t = reader.next()) {
        if (t->utterance_id != utterance) continue;
        const auto result = rank_reference_tokens(*t, a);
        out << format_alignment_table(*t, result, g.vocab.empty() ? nullptr : &vocab);
        const std::vector<AlignmentResult> one{result};
        out << fmt::format("edit_distance={} avg_rank={} k_cand={}\n", result.edit_distance,
                           format_number(result.ranked.empty() ? std::nan("") : average_rank(one, filter)),
                           a.k_cand);
        return 0;
      }
      err << "utterance '" << utterance << "' not found in " << path << '\n';
      return 1;
    }

    if (embed->parsed()) {
      require_path(g.traces, "--traces");
      const std::size_t k = k_override.value_or(a.k_pca);
      if (k == 0 || k > a.k_cand) throw std::invalid_argument("--k must be in [1, k_cand]");
      TracesByLanguage by_language;
      for (auto& t : read_traces(g.traces, a.vocab_size)) by_language[t.language].push_back(std::move(t));
      const auto fscale = scale == "counts" ? FrequencyScale::Counts : FrequencyScale::Relative;
      const auto freq = build_frequency_matrix(by_language, k, fscale, filter);
      const auto z = standardize(freq.values);
      tsne.seed = a.seed;
      const auto result = method == "tsne" ? tsne_2d(z.values, tsne) : pca_2d(z.values);
      std::ostringstream os;
      write_embedding_csv(os, freq.languages, result, {k, fscale, z.kept_columns.size(), tsne.perplexity});
      emit(out_path, os.str(), out);
      return 0;
    }

    if (correlate_cmd->parsed()) {
      require_path(g.manifest, "--manifest");
      const auto manifest = load_manifest(g.manifest);
      const auto columns = read_metrics_csv(metrics_path);
      std::ostringstream os;
      write_stats_csv(os, columns, manifest, permutations, a.seed);
      emit(out_path, os.str(), out);
      return 0;
    }

    if (coverage->parsed()) {
      require_path(g.traces, "--traces");
      std::vector<UtteranceTrace> traces;
      for (auto& t : read_traces(g.traces, a.vocab_size))
        if (t.language == language) traces.push_back(std::move(t));
      if (traces.empty()) throw std::invalid_argument("no traces for language '" + language + "'");
      std::ostringstream os;
      write_coverage_csv(os, coverage_curve(traces, window_sec, filter));
      emit(out_path, os.str(), out);
      return 0;
    }

    if (run_cmd->parsed()) {
      require_path(g.traces, "--traces");
      require_path(g.manifest, "--manifest");
      pipeline.analysis = a;
      pipeline.vocab_path = g.vocab;
      const auto report = run_pipeline(g.traces, g.manifest, pipeline, g.out_dir);
      for (const auto& e : report.errors) err << "error: " << e << '\n';
      out << "wrote " << report.outputs.size() << " files to " << g.out_dir << '\n';
      return report.exit_code();
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace subtok::cli
