// reviewkit command line: catalog ingest, topic lookup, similarity, phrase
// suggestion, evaluation reports, fine-tune export and the HTTP service.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reviewkit/engine.hpp"
#include "reviewkit/evaluation.hpp"
#include "reviewkit/generation.hpp"
#include "reviewkit/service.hpp"
#include "reviewkit/similarity.hpp"

namespace rk = reviewkit;
using json = nlohmann::json;

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rk::IoError("cannot open " + path);
  return in;
}

// "name=path" or "path" (name = file stem).
std::pair<std::string, std::string> named_path(const std::string& arg) {
  if (auto eq = arg.find('='); eq != std::string::npos) return {arg.substr(0, eq), arg.substr(eq + 1)};
  return {std::filesystem::path(arg).stem().string(), arg};
}

std::vector<rk::generation::TopicRating> parse_rates(const std::vector<std::string>& rates) {
  std::vector<rk::generation::TopicRating> out;
  for (const auto& r : rates) {
    const auto eq = r.rfind('=');
    if (eq == std::string::npos) throw rk::InvalidArgument("--rate expects topic=stars, got '" + r + "'");
    int stars = 0;
    try {
      stars = std::stoi(r.substr(eq + 1));
    } catch (const std::exception&) {
      throw rk::InvalidArgument("--rate stars must be an integer, got '" + r + "'");
    }
    rk::generation::TopicRating tr{r.substr(0, eq), stars};
    rk::generation::validate(tr);
    out.push_back(tr);
  }
  return out;
}

rk::service::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reviewkit: topic-guided review phrase suggestion"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string format = "text";
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));

  rk::service::ServiceConfig cfg = rk::service::config_from_env();
  std::string data_dir = cfg.data_dir ? cfg.data_dir->string() : "";
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--data-dir", data_dir, "Data directory (default $DATA_DIR, else in-memory)");
    sub->add_option("--backend", cfg.backend, "template or http")->check(CLI::IsMember({"template", "http"}));
    sub->add_option("--llm-url", cfg.llm_url, "HTTP backend endpoint (default $LLM_URL)");
    sub->add_option("--seed", cfg.seed, "Template backend seed");
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Ingest reviews (JSON Lines) and rebuild the topic catalog");
  add_common(ingest);
  std::string ingest_file;
  std::string product_types_file;
  bool no_rebuild = false;
  std::size_t threshold = 250;
  ingest->add_option("file", ingest_file, "Reviews file")->required();
  ingest->add_option("--product-types", product_types_file, "Product types file (JSON Lines)");
  ingest->add_option("--threshold", threshold, "Minimum reviews for mining");
  ingest->add_flag("--no-rebuild", no_rebuild, "Skip catalog rebuild");

  // topics
  auto* topics = app.add_subcommand("topics", "Top topics for a product type");
  add_common(topics);
  std::string pt;
  bool no_fallback = false;
  topics->add_option("product_type", pt)->required();
  topics->add_flag("--no-fallback", no_fallback, "Fail instead of using cold-start fallbacks");

  // similar
  auto* similar = app.add_subcommand("similar", "Similar product types");
  add_common(similar);
  std::string method = "cosine";
  rk::similarity::SimilarityMethod sim;
  similar->add_option("product_type", pt)->required();
  similar->add_option("--method", method)->check(CLI::IsMember({"levenshtein", "cosine", "llm"}));
  similar->add_option("--k", sim.k)->check(CLI::PositiveNumber);
  similar->add_option("--threshold", sim.threshold)->check(CLI::Range(0.0, 1.0));

  // suggest
  auto* suggest = app.add_subcommand("suggest", "Suggest phrases for rated topics");
  add_common(suggest);
  std::vector<std::string> rates;
  std::string product_name;
  suggest->add_option("product_type", pt)->required();
  suggest->add_option("--rate", rates, "topic=stars (repeatable)")->required();
  suggest->add_option("--product-name", product_name);
  suggest->add_flag("--strict", cfg.limits.strict, "Reject phrases outside the word limits");

  // eval-bleu
  auto* eval_bleu = app.add_subcommand("eval-bleu", "Average BLEU over candidate/reference records");
  std::vector<std::string> bleu_inputs;
  bool eligibility = false;
  bool smoothing = false;
  eval_bleu->add_option("--input", bleu_inputs, "[method=]file of {id,candidate,references}")->required();
  eval_bleu->add_flag("--eligibility", eligibility, "Keep only equal-length pairs");
  eval_bleu->add_flag("--smoothing", smoothing, "Add-epsilon smoothing for zero-match orders");

  // eval-topics
  auto* eval_topics = app.add_subcommand("eval-topics", "Topic suggestion accuracy");
  std::string gold_file;
  std::string suggested_file;
  std::string descriptions_file;
  eval_topics->add_option("--gold", gold_file, "Gold topics {product_type,topics}")->required();
  eval_topics->add_option("--suggested", suggested_file, "Suggested topics {product_type,topics}")->required();
  eval_topics->add_option("--descriptions", descriptions_file, "Description-derived topics for PTs without gold");

  // eval-similarity
  auto* eval_similarity = app.add_subcommand("eval-similarity", "Similar product type detection accuracy");
  std::vector<std::string> pred_files;
  std::size_t eval_k = 10;
  eval_similarity->add_option("--gold", gold_file, "Gold {product_type,similar}")->required();
  eval_similarity->add_option("--pred", pred_files, "[method=]predictions file (repeatable)")->required();
  eval_similarity->add_option("--k", eval_k)->check(CLI::PositiveNumber);

  // export-finetune
  auto* export_ft = app.add_subcommand("export-finetune", "Export instruction/context/response records");
  std::string export_input;
  std::string export_output;
  export_ft->add_option("input", export_input, "Annotated reviews (JSON Lines)")->required();
  export_ft->add_option("-o,--output", export_output, "Output file (default stdout)");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  add_common(serve);
  serve->add_option("--port", cfg.port)->check(CLI::Range(0, 65535));
  serve->add_option("--host", cfg.host);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const bool as_json = format == "json";
  if (!data_dir.empty()) cfg.data_dir = data_dir;

  try {
    if (*ingest) {
      auto engine = rk::service::make_engine(cfg);
      if (!product_types_file.empty()) {
        auto in = open_input(product_types_file);
        std::string line;
        while (std::getline(in, line))
          if (!rk::text::trim(line).empty())
            engine->catalog().register_product_type(rk::catalog::product_type_from_json(json::parse(line)));
      }
      auto in = open_input(ingest_file);
      const auto summary = engine->catalog().ingest(in);
      rk::catalog::MiningOptions mining;
      mining.coverage_threshold = threshold;
      if (!no_rebuild) engine->catalog().rebuild(mining);
      const auto coverage =
          engine->catalog().with_store([&](const rk::catalog::ReviewStore& s) { return s.coverage_report(threshold); });
      if (as_json) {
        json out = rk::catalog::to_json(summary);
        out["coverage"] = rk::catalog::to_json(coverage);
        out["catalog_version"] = engine->catalog().snapshot()->version;
        std::cout << out.dump(2) << "\n";
      } else {
        std::cout << "accepted " << summary.accepted << ", rejected " << summary.rejected << "\n";
        for (const auto& r : summary.rejections) std::cout << "  line " << r.line << ": " << r.reason << "\n";
        std::cout << rk::catalog::format_coverage(coverage);
      }
      return 0;
    }

    if (*topics) {
      auto engine = rk::service::make_engine(cfg);
      const auto r = engine->topics(pt, !no_fallback);
      if (as_json) {
        json list = json::array();
        for (const auto& t : r.topics) list.push_back(rk::catalog::to_json(t));
        std::cout << json{{"product_type", pt},
                          {"topics", list},
                          {"provenance", std::string(rk::catalog::to_string(r.provenance))},
                          {"detail", r.detail},
                          {"catalog_version", r.catalog_version}}
                         .dump(2)
                  << "\n";
      } else {
        std::cout << "provenance: " << rk::catalog::to_string(r.provenance);
        if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
        std::cout << "\n";
        for (std::size_t i = 0; i < r.topics.size(); ++i) std::cout << i + 1 << ". " << r.topics[i].label << "\n";
      }
      return 0;
    }

    if (*similar) {
      auto engine = rk::service::make_engine(cfg);
      sim.kind = rk::similarity::method_from_string(method);
      const auto ranked = engine->similar(pt, sim);
      if (as_json) {
        json list = json::array();
        for (const auto& s : ranked) list.push_back({{"product_type", s.id}, {"name", s.name}, {"score", s.score}});
        std::cout << json{{"product_type", pt}, {"method", method}, {"similar", list}}.dump(2) << "\n";
      } else {
        for (const auto& s : ranked) std::cout << s.name << "\t" << s.score << "\n";
      }
      return 0;
    }

    if (*suggest) {
      const auto ratings = parse_rates(rates);
      auto engine = rk::service::make_engine(cfg);
      const auto result = engine->suggest(pt, product_name, ratings);
      if (as_json) {
        json list = json::array();
        for (const auto& s : result.suggestions) list.push_back(rk::generation::to_json(s));
        std::cout << json{{"product_type", pt},
                          {"backend", result.backend},
                          {"suggestions", list},
                          {"diagnostics", result.diagnostics}}
                         .dump(2)
                  << "\n";
      } else {
        for (const auto& s : result.suggestions) {
          std::cout << s.topic << ": " << s.text;
          if (!s.flags.empty()) {
            std::cout << "  [";
            bool first = true;
            for (auto f : s.flags) {
              std::cout << (first ? "" : ",") << rk::generation::to_string(f);
              first = false;
            }
            std::cout << "]";
          }
          std::cout << "\n";
        }
        for (const auto& d : result.diagnostics) std::cerr << "note: " << d << "\n";
      }
      return 0;
    }

    if (*eval_bleu) {
      std::vector<rk::evaluation::BleuReport> reports;
      rk::evaluation::BleuOptions opts;
      opts.smoothing = smoothing;
      for (const auto& arg : bleu_inputs) {
        const auto [name, path] = named_path(arg);
        auto in = open_input(path);
        reports.push_back(rk::evaluation::corpus_bleu(rk::evaluation::read_bleu_pairs(in), eligibility, opts, name));
      }
      if (as_json) {
        json list = json::array();
        for (const auto& r : reports) list.push_back(rk::evaluation::to_json(r));
        std::cout << json{{"reports", list}, {"eligibility", eligibility}}.dump(2) << "\n";
      } else {
        std::cout << rk::evaluation::format_bleu_table(reports);
        for (const auto& r : reports)
          std::cout << r.method << ": " << r.eligible_count << " of " << r.total_count << " pairs eligible ("
                    << rk::text::format_percent(r.eligible_count, r.total_count) << "%)\n";
      }
      return 0;
    }

    if (*eval_topics) {
      auto gin = open_input(gold_file);
      auto sin = open_input(suggested_file);
      rk::evaluation::TopicSets descriptions;
      if (!descriptions_file.empty()) {
        auto din = open_input(descriptions_file);
        descriptions = rk::evaluation::read_topic_sets(din);
      }
      const auto r = rk::evaluation::topic_accuracy(rk::evaluation::read_topic_sets(gin),
                                                    rk::evaluation::read_topic_sets(sin), descriptions);
      if (as_json) {
        std::cout << rk::evaluation::to_json(r).dump(2) << "\n";
      } else {
        std::cout << "Total | Relevant | Irrelevant | Unjudged | Accuracy\n";
        std::cout << r.total << " | " << r.relevant << " | " << r.irrelevant << " | " << r.unjudged << " | "
                  << (r.defined ? r.percent() + "%" : "n/a") << "\n";
      }
      return 0;
    }

    if (*eval_similarity) {
      auto gin = open_input(gold_file);
      const auto gold = rk::similarity::as_gold(rk::similarity::read_similarity_records(gin));
      std::vector<rk::similarity::SimilarityReport> reports;
      for (const auto& arg : pred_files) {
        const auto [name, path] = named_path(arg);
        auto pin = open_input(path);
        reports.push_back(
            rk::similarity::evaluate_similarity_methods(gold, rk::similarity::read_similarity_records(pin), eval_k, name));
      }
      if (as_json) {
        json list = json::array();
        for (const auto& r : reports) list.push_back(rk::similarity::to_json(r));
        std::cout << json{{"reports", list}}.dump(2) << "\n";
      } else {
        std::cout << rk::similarity::format_similarity_table(reports);
      }
      return 0;
    }

    if (*export_ft) {
      auto in = open_input(export_input);
      std::vector<std::string> diagnostics;
      const auto reviews = rk::generation::read_annotated_reviews(in, &diagnostics);
      auto result = rk::generation::export_finetune_records(reviews);
      diagnostics.insert(diagnostics.end(), result.diagnostics.begin(), result.diagnostics.end());
      std::ofstream file;
      if (!export_output.empty()) {
        file.open(export_output);
        if (!file) throw rk::IoError("cannot write " + export_output);
      }
      std::ostream& out = export_output.empty() ? std::cout : file;
      for (const auto& r : result.records) out << rk::generation::to_json(r).dump() << "\n";
      for (const auto& d : diagnostics) std::cerr << "skipped: " << d << "\n";
      for (const auto& g : result.guidance) std::cerr << "note: " << g << "\n";
      std::cerr << result.records.size() << " records written\n";
      return 0;
    }

    if (*serve) {
      rk::service::Service service(cfg);
      const int port = service.bind();
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on http://" << cfg.host << ":" << port << "/api/v1 (backend "
                << service.engine().backend().kind() << ")\n";
      service.run();
      g_service = nullptr;
      return 0;
    }
  } catch (const rk::Error& e) {
    std::cerr << "error [" << rk::to_string(e.code()) << "]: " << e.what();
    if (!e.detail().empty()) std::cerr << " (" << e.detail() << ")";
    std::cerr << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
