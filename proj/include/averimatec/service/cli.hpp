#pragma once

#include <CLI11.hpp>

#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "averimatec/net/http.hpp"
#include "averimatec/pipeline/mock.hpp"
#include "averimatec/pipeline/run.hpp"
#include "averimatec/pipeline/trace.hpp"
#include "averimatec/service/server.hpp"
#include "averimatec/store/builder.hpp"
#include "averimatec/store/persist.hpp"

namespace averimatec::service {

namespace detail {

struct JudgeChoice {
  std::unique_ptr<scoring::JudgeAdapter> backend;
  std::unique_ptr<scoring::CachingJudge> cache;

  scoring::JudgeAdapter& get() { return cache ? *cache : *backend; }
};

/// HTTP judge when a URL is given (flag or AVERIMATEC_JUDGE_URL), else the offline mock.
inline JudgeChoice make_judge(const std::string& url, const std::string& cache_dir) {
  JudgeChoice j;
  std::optional<net::Endpoint> ep;
  if (!url.empty()) {
    ep = net::endpoint_from_env("AVERIMATEC_JUDGE").value_or(net::Endpoint{});
    ep->url = url;
  } else {
    ep = net::endpoint_from_env("AVERIMATEC_JUDGE");
  }
  if (ep) j.backend = std::make_unique<net::HttpJudge>(*ep);
  else j.backend = std::make_unique<scoring::MockJudge>();
  if (!cache_dir.empty()) j.cache = std::make_unique<scoring::CachingJudge>(*j.backend, fs::path(cache_dir));
  return j;
}

/// `mock`, `http` (AVERIMATEC_<PREFIX>_URL), or `replay:<trace dir>`.
inline std::unique_ptr<pipeline::ModelAdapter> make_model(const std::string& spec, const std::string& prefix) {
  if (spec == "mock") return std::make_unique<pipeline::MockModelAdapter>();
  if (spec == "http") {
    auto ep = net::endpoint_from_env("AVERIMATEC_" + prefix);
    if (!ep) throw Error("--model http needs AVERIMATEC_" + prefix + "_URL");
    return std::make_unique<net::HttpModelAdapter>("http:" + ep->url, *ep);
  }
  if (spec.rfind("replay:", 0) == 0) {
    return std::make_unique<pipeline::ReplayAdapter>(pipeline::load_traces(spec.substr(7)));
  }
  throw Error("unknown model '" + spec + "' (expected mock, http or replay:<dir>)");
}

inline Split split_of(const std::string& s) { return parse_split(s); }

}  // namespace detail

/// Entry point shared by the binary and the tests. Returns the process exit code:
/// 0 on success, 1 on a failed operation, 2 on a usage error.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"AVerImaTeC claim verification harness", "averimatec"};
  app.require_subcommand(1);

  // store -------------------------------------------------------------------
  auto* store = app.add_subcommand("store", "Knowledge-store construction and inspection");
  store->require_subcommand(1);
  struct {
    std::string claims, fixture, out, split = "dev", model = "mock";
    std::uint64_t seed = 0;
    std::size_t workers = 4, image_cap = 100;
    bool strict_dates = false;
  } sb;
  auto* build = store->add_subcommand("build", "Build knowledge stores from search services");
  build->add_option("--claims", sb.claims, "Claim file (JSONL)")->required();
  build->add_option("--split", sb.split, "train, dev or test");
  build->add_option("--fixture", sb.fixture, "Record/replay fixture instead of AVERIMATEC_SEARCH_URL");
  build->add_option("--model", sb.model, "Query generator: mock, http or replay:<dir>");
  build->add_option("--out", sb.out, "Store root directory")->required();
  build->add_option("--seed", sb.seed, "Shuffle seed");
  build->add_option("--workers", sb.workers, "Concurrent requests");
  build->add_option("--image-cap", sb.image_cap, "Images kept per query");
  build->add_flag("--strict-dates", sb.strict_dates, "Drop pages whose date cannot be established");

  struct {
    std::string entries, claims, out, split = "dev";
    std::uint64_t seed = 0;
  } si;
  auto* ingest = store->add_subcommand("ingest", "Assemble stores from released knowledge-store files");
  ingest->add_option("--entries", si.entries, "Entry file (JSONL)")->required();
  ingest->add_option("--claims", si.claims, "Claim file (JSONL)")->required();
  ingest->add_option("--split", si.split, "train, dev or test");
  ingest->add_option("--out", si.out, "Store root directory")->required();
  ingest->add_option("--seed", si.seed, "Shuffle seed");

  std::string stats_dir;
  bool stats_json = false;
  auto* stats = store->add_subcommand("stats", "Per-channel store statistics");
  stats->add_option("--dir", stats_dir, "Store root directory")->required();
  stats->add_flag("--json", stats_json, "Print JSON");

  // pipeline ----------------------------------------------------------------
  auto* pipeline_cmd = app.add_subcommand("pipeline", "Run the verification pipeline");
  pipeline_cmd->require_subcommand(1);
  struct {
    std::string claims, stores, train, out, trace_dir, prompts, model = "mock", mllm, split = "dev";
    std::size_t workers = 1, questions = 5;
    bool iterative = false;
  } pr;
  auto* prun = pipeline_cmd->add_subcommand("run", "Produce a submission");
  prun->add_option("--claims", pr.claims, "Claims to verify (JSONL)")->required();
  prun->add_option("--split", pr.split, "train, dev or test");
  prun->add_option("--stores", pr.stores, "Store root directory")->required();
  prun->add_option("--train", pr.train, "Few-shot pool (JSONL)");
  prun->add_option("--out", pr.out, "Submission file (JSONL)")->required();
  prun->add_option("--trace-dir", pr.trace_dir, "Write per-claim traces here");
  prun->add_option("--prompts", pr.prompts, "Prompt template directory");
  prun->add_option("--model", pr.model, "mock, http or replay:<trace dir>");
  prun->add_option("--mllm", pr.mllm, "Multimodal model; defaults to --model");
  prun->add_option("--workers", pr.workers, "Claims in flight");
  prun->add_option("--questions", pr.questions, "Questions per claim");
  prun->add_flag("--iterative", pr.iterative, "Generate questions one at a time");

  // score -------------------------------------------------------------------
  auto* score = app.add_subcommand("score", "Score submissions");
  score->require_subcommand(1);
  struct {
    std::string claims, submission, out, text, team, judge_url, cache_dir, root, id;
    double tau = scoring::kDefaultTau;
    std::size_t workers = 1;
  } sr;
  auto* srun = score->add_subcommand("run", "Score one submission");
  srun->add_option("--claims", sr.claims, "Gold claims (JSONL)");
  srun->add_option("--submission", sr.submission, "Submission (JSONL)");
  srun->add_option("--root", sr.root, "Data root; score a stored submission by --id");
  srun->add_option("--id", sr.id, "Stored submission id");
  srun->add_option("--team", sr.team, "Team name for the report");
  srun->add_option("--out", sr.out, "Report file (JSON)");
  srun->add_option("--text", sr.text, "Rendered report file");
  srun->add_option("--tau", sr.tau, "Evidence recall threshold")->check(CLI::Range(0.0, 1.0));
  srun->add_option("--judge-url", sr.judge_url, "HTTP judge; default is the offline mock");
  srun->add_option("--cache-dir", sr.cache_dir, "Judge cache directory");
  srun->add_option("--workers", sr.workers, "Claims scored concurrently");

  struct {
    std::string root, team, file;
  } sub;
  auto* submit = app.add_subcommand("submit", "Upload a submission into a data root");
  submit->add_option("--root", sub.root, "Data root")->required();
  submit->add_option("--team", sub.team, "Team name")->required();
  submit->add_option("file", sub.file, "Submission (JSONL)")->required();

  // leaderboard -------------------------------------------------------------
  std::string lb_reports, lb_root;
  bool lb_json = false;
  auto* lb = app.add_subcommand("leaderboard", "Rank stored score reports");
  lb->add_option("--reports", lb_reports, "Directory of report files");
  lb->add_option("--root", lb_root, "Data root (uses <root>/reports)");
  lb->add_flag("--json", lb_json, "Print JSON");

  // annotate ----------------------------------------------------------------
  auto* annotate = app.add_subcommand("annotate", "Human evaluation of predicted evidence");
  annotate->require_subcommand(1);
  struct {
    std::string root, pool;
    std::uint64_t seed = 0;
    std::size_t per_team = 25, strata = 5, raters = 2;
    std::vector<std::string> annotators;
  } ap;
  auto* plan = annotate->add_subcommand("plan", "Draw samples and assign annotators");
  plan->add_option("--root", ap.root, "Data root")->required();
  plan->add_option("--seed", ap.seed, "Sampling seed");
  plan->add_option("--per-team", ap.per_team, "Samples per team");
  plan->add_option("--strata", ap.strata, "Score strata over [0, 1]");
  plan->add_option("--raters", ap.raters, "Annotators per sample");
  plan->add_option("--annotator", ap.annotators, "Annotator (repeatable); defaults to the teams");
  plan->add_option("--claim-pool", ap.pool, "File of claim ids to draw from, one per line");

  std::string at_root, at_annotator;
  auto* tasks = annotate->add_subcommand("tasks", "List an annotator's tasks");
  tasks->add_option("--root", at_root, "Data root")->required();
  tasks->add_option("--annotator", at_annotator, "Annotator")->required();

  struct {
    std::string root, sample, annotator;
    int coverage = -1, relevance = -1;
  } ar;
  auto* rate = annotate->add_subcommand("rate", "Record a rating");
  rate->add_option("--root", ar.root, "Data root")->required();
  rate->add_option("--sample", ar.sample, "Sample id")->required();
  rate->add_option("--annotator", ar.annotator, "Annotator")->required();
  rate->add_option("--coverage", ar.coverage, "0..5")->required();
  rate->add_option("--relevance", ar.relevance, "0..5")->required();

  std::string ae_root, ae_out;
  auto* exp = annotate->add_subcommand("export", "Correlation tables over collected ratings");
  exp->add_option("--root", ae_root, "Data root")->required();
  exp->add_option("--out", ae_out, "Write the tables as JSON");

  // serve -------------------------------------------------------------------
  struct {
    std::string root, host = "127.0.0.1", judge_url, cache_dir;
    int port = 8080;
    double tau = scoring::kDefaultTau;
  } sv;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--root", sv.root, "Data root")->required();
  serve->add_option("--host", sv.host, "Bind address");
  serve->add_option("--port", sv.port, "Port");
  serve->add_option("--tau", sv.tau, "Evidence recall threshold")->check(CLI::Range(0.0, 1.0));
  serve->add_option("--judge-url", sv.judge_url, "HTTP judge; default is the offline mock");
  serve->add_option("--cache-dir", sv.cache_dir, "Judge cache directory");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
    return 2;
  }

  try {
    if (build->parsed()) {
      auto claims = load_claims(sb.claims, detail::split_of(sb.split));
      std::unique_ptr<store::FixtureServices> fixture;
      std::unique_ptr<net::HttpServices> http;
      store::Services services;
      if (!sb.fixture.empty()) {
        fixture = std::make_unique<store::FixtureServices>(json::parse(read_file(sb.fixture)));
        services = store::Services::from(*fixture);
      } else if (auto ep = net::endpoint_from_env("AVERIMATEC_SEARCH")) {
        http = std::make_unique<net::HttpServices>(*ep);
        services = {http.get(), http.get(), http.get(), http.get(), http.get()};
      } else {
        throw Error("store build needs --fixture or AVERIMATEC_SEARCH_URL");
      }
      auto generator = detail::make_model(sb.model, "MODEL");
      store::BuildOptions opts;
      opts.seed = sb.seed;
      opts.workers = sb.workers;
      opts.image_cap = sb.image_cap;
      opts.ris.strict = sb.strict_dates;
      for (const auto& c : claims) {
        auto r = store::build_store(c, *generator, services, opts);
        store::save_store(r.store, sb.out);
        for (const auto& f : r.failures) err << c.id << ": " << f << "\n";
        for (const auto& w : r.warnings) err << c.id << ": " << w << "\n";
        out << c.id << ": " << r.store.entries.size() << " entries from " << r.queries.size() << " queries\n";
      }
      return 0;
    }
    if (ingest->parsed()) {
      auto claims = load_claims(si.claims, detail::split_of(si.split));
      std::ifstream in(si.entries);
      if (!in) throw Error("cannot open " + si.entries);
      auto entries = store::read_entries(in);
      for (const auto& c : claims) {
        std::vector<std::string> gold;
        for (const auto& qa : c.gold_qas) {
          if (!qa.answer.url.empty()) gold.push_back(qa.answer.url);
        }
        auto it = entries.find(c.id);
        auto a = store::assemble_store(c.id, c.claim_date, it == entries.end() ? std::vector<store::KnowledgeStoreEntry>{}
                                                                               : it->second,
                                       gold, si.seed);
        store::save_store(a.store, si.out);
        for (const auto& w : a.warnings) err << c.id << ": " << w << "\n";
        out << c.id << ": " << a.store.entries.size() << " entries\n";
      }
      return 0;
    }
    if (stats->parsed()) {
      auto s = store::compute_stats(store::load_stores(stats_dir));
      if (stats_json) {
        out << json(s).dump(2) << "\n";
      } else {
        auto row = [&](const char* name, const store::ChannelStats& c) {
          out << name << ": " << c.url_count_total << " urls, " << c.url_count_scraped << " scraped, "
              << c.word_count << " words\n";
        };
        row("search text", s.search_text);
        row("reverse image", s.reverse_image);
        out << "images: " << s.image_count << "\n";
      }
      return 0;
    }
    if (prun->parsed()) {
      auto claims = load_claims(pr.claims, detail::split_of(pr.split));
      std::vector<Claim> train;
      if (!pr.train.empty()) train = load_claims(pr.train, Split::Train);
      std::map<std::string, store::ClaimStore> stores;
      for (auto& s : store::load_stores(pr.stores)) stores.emplace(s.claim_id, std::move(s));
      auto llm = detail::make_model(pr.model, "MODEL");
      auto mllm = pr.mllm.empty() ? nullptr : detail::make_model(pr.mllm, "MLLM");
      std::unique_ptr<retrieval::EmbeddingProvider> embedder;
      if (auto ep = net::endpoint_from_env("AVERIMATEC_EMBEDDING")) {
        const char* dim = std::getenv("AVERIMATEC_EMBEDDING_DIM");
        embedder = std::make_unique<net::HttpEmbeddingProvider>(*ep, dim ? std::stoul(dim) : 768);
      }
      pipeline::PipelineConfig cfg;
      cfg.workers = pr.workers;
      cfg.questions = pr.questions;
      cfg.iterative = pr.iterative;
      auto prompts = pr.prompts.empty() ? pipeline::PromptSet{} : pipeline::PromptSet::load(pr.prompts);
      auto result = pipeline::run_pipeline(claims, stores, train, {llm.get(), mllm.get(), embedder.get()}, cfg, prompts);
      write_file(pr.out, serialize_submission(result.submission));
      if (!pr.trace_dir.empty()) pipeline::save_traces(result.traces, pr.trace_dir);
      for (const auto& w : result.warnings) err << "warning: " << w << "\n";
      for (const auto& f : result.failures) err << "failed: " << f.claim_id << ": " << f.message << "\n";
      out << result.submission.records.size() << " of " << claims.size() << " claims predicted\n";
      return result.failures.empty() ? 0 : 1;
    }
    if (srun->parsed()) {
      auto judge = detail::make_judge(sr.judge_url, sr.cache_dir);
      scoring::ScoringOptions opts{sr.tau, sr.workers};
      json report;
      if (!sr.root.empty()) {
        if (sr.id.empty()) throw Error("score run --root needs --id");
        report = Workspace(sr.root).score(sr.id, judge.get(), opts);
      } else {
        if (sr.claims.empty() || sr.submission.empty()) throw Error("score run needs --claims and --submission");
        auto claims = load_claims(sr.claims, Split::Dev);
        auto raw = load_submission(sr.submission);
        for (const auto& m : validate_submission(raw, claims).messages()) err << "warning: " << m << "\n";
        auto rep = scoring::score_submission(claims, raw, judge.get(), opts);
        auto b = scoring::breakdown(rep, claims);
        report = scoring::to_json_report(rep, &b);
        auto team = sr.team.empty() ? fs::path(sr.submission).stem().string() : sr.team;
        report["team"] = team;
        report["id"] = team;
        auto rendered = scoring::render_report(team, rep, b);
        if (!sr.text.empty()) write_file(sr.text, rendered);
        out << rendered;
      }
      if (!sr.out.empty()) write_file(sr.out, report.dump(2));
      for (const auto& w : report.at("warnings")) err << "warning: " << w.get<std::string>() << "\n";
      return 0;
    }
    if (submit->parsed()) {
      auto info = Workspace(sub.root).add_submission(sub.team, read_file(sub.file));
      out << to_json(info).dump(2) << "\n";
      return 0;
    }
    if (lb->parsed()) {
      fs::path dir = !lb_reports.empty() ? fs::path(lb_reports) : !lb_root.empty() ? fs::path(lb_root) / "reports" : "";
      if (dir.empty()) throw Error("leaderboard needs --reports or --root");
      std::vector<json> reports;
      if (fs::exists(dir)) {
        std::vector<fs::path> paths;
        for (const auto& e : fs::directory_iterator(dir)) {
          if (e.path().extension() == ".json") paths.push_back(e.path());
        }
        std::sort(paths.begin(), paths.end());
        for (const auto& p : paths) {
          auto j = json::parse(read_file(p));
          if (!j.contains("team")) j["team"] = p.stem().string();
          reports.push_back(std::move(j));
        }
      }
      auto rows = Workspace::leaderboard_from(reports);
      if (lb_json) {
        json arr = json::array();
        for (std::size_t i = 0; i < rows.size(); ++i) {
          arr.push_back({{"rank", i + 1},
                         {"team", rows[i].team},
                         {"question_score", rows[i].question},
                         {"evidence_score", rows[i].evidence},
                         {"justification_score", rows[i].justification},
                         {"averimatec_score", rows[i].averimatec}});
        }
        out << arr.dump(2) << "\n";
      } else {
        out << scoring::render_leaderboard(rows);
      }
      return 0;
    }
    if (plan->parsed()) {
      analysis::SamplingOptions opts;
      opts.seed = ap.seed;
      opts.per_team = ap.per_team;
      opts.strata = ap.strata;
      opts.raters = ap.raters;
      opts.annotators = ap.annotators;
      if (!ap.pool.empty()) {
        std::set<std::string> pool;
        std::istringstream in(read_file(ap.pool));
        for (std::string line; std::getline(in, line);) {
          if (auto t = text::trim(line); !t.empty()) pool.insert(std::string(t));
        }
        opts.claim_pool = std::move(pool);
      }
      auto p = Workspace(ap.root).make_plan(opts);
      for (const auto& w : p.warnings) err << "warning: " << w << "\n";
      out << p.samples.size() << " samples over " << p.claims().size() << " claims; " << p.task_count()
          << " rating tasks\n";
      return 0;
    }
    if (tasks->parsed()) {
      out << Workspace(at_root).tasks(at_annotator).dump(2) << "\n";
      return 0;
    }
    if (rate->parsed()) {
      auto status = Workspace(ar.root).rate(
          {{"sample_id", ar.sample}, {"annotator", ar.annotator}, {"coverage", ar.coverage}, {"relevance", ar.relevance}});
      out << (status == analysis::RatingLog::Upsert::Inserted  ? "inserted"
              : status == analysis::RatingLog::Upsert::Updated ? "updated"
                                                               : "unchanged")
          << "\n";
      return 0;
    }
    if (exp->parsed()) {
      auto rep = Workspace(ae_root).correlations();
      if (!ae_out.empty()) write_file(ae_out, analysis::to_json(rep).dump(2));
      out << analysis::render_correlations(rep);
      for (const auto& w : rep.warnings) err << "warning: " << w << "\n";
      return 0;
    }
    if (serve->parsed()) {
      Workspace ws(sv.root);
      auto judge = detail::make_judge(sv.judge_url, sv.cache_dir);
      Server server(ws, judge.get(), {sv.tau, 1});
      out << "listening on " << sv.host << ":" << sv.port << std::endl;
      if (!server.listen(sv.host, sv.port)) throw Error("cannot bind " + sv.host + ":" + std::to_string(sv.port));
      return 0;
    }
  } catch (const FieldErrors& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace averimatec::service
