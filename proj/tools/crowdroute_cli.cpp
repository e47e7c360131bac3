#include <atomic>
#include <chrono>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "crowdroute/config.hpp"
#include "crowdroute/crowd_sim.hpp"
#include "crowdroute/error.hpp"
#include "crowdroute/http_api.hpp"
#include "crowdroute/io.hpp"
#include "crowdroute/landmark_select.hpp"
#include "crowdroute/question_tree.hpp"
#include "crowdroute/significance.hpp"
#include "crowdroute/task_service.hpp"
#include "crowdroute/worker_model.hpp"
#include "crowdroute/worker_select.hpp"

namespace cr = crowdroute;

namespace {

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    cr::io::write_text(path, text);
  }
}

cr::EngineConfig config_at(const std::string& path) { return path.empty() ? cr::EngineConfig{} : cr::load_config(path); }

cr::LandmarkIndex load_index(const std::string& landmarks, const std::string& significance) {
  auto list = cr::io::parse_landmarks(cr::io::read_text(landmarks));
  cr::LandmarkIndex index(std::move(list));
  if (!significance.empty()) index = index.with_significance(cr::io::parse_significance(cr::io::read_text(significance)));
  return index;
}

cr::CandidateSet load_routes(const std::string& routes, const std::string& raw_routes, const cr::LandmarkIndex& index,
                             double snap_km) {
  std::vector<cr::CandidateSet::Entry> entries;
  if (!routes.empty()) entries = cr::io::parse_landmark_routes(cr::io::read_text(routes));
  if (!raw_routes.empty()) {
    for (auto& [tag, raw] : cr::io::parse_raw_routes(cr::io::read_text(raw_routes))) {
      entries.push_back({tag, cr::calibrate(raw, index, snap_km)});
    }
  }
  return cr::CandidateSet(std::move(entries));
}

std::vector<cr::LandmarkId> split_ids(const std::string& s) {
  std::vector<cr::LandmarkId> out;
  std::istringstream in(s);
  for (std::string id; std::getline(in, id, ',');) {
    if (!id.empty()) out.push_back(id);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crowdroute: crowd-based route evaluation engine"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "engine config (JSON)")->check(CLI::ExistingFile);

  // ingest
  std::string db = "crowdroute.db", landmarks_path, workers_path, checkins_path;
  auto* ingest = app.add_subcommand("ingest", "load landmarks, workers and check-ins into a store");
  ingest->add_option("--db", db, "store path");
  ingest->add_option("--landmarks", landmarks_path, "landmark TSV")->check(CLI::ExistingFile);
  ingest->add_option("--workers", workers_path, "worker JSONL")->check(CLI::ExistingFile);
  ingest->add_option("--checkins", checkins_path, "check-in TSV")->check(CLI::ExistingFile);
  bool retrain = false;
  ingest->add_flag("--retrain", retrain, "train the familiarity model afterwards");

  // significance
  std::string out_path;
  auto* significance = app.add_subcommand("significance", "infer landmark significance from check-ins");
  significance->add_option("--landmarks", landmarks_path)->required()->check(CLI::ExistingFile);
  significance->add_option("--checkins", checkins_path)->required()->check(CLI::ExistingFile);
  significance->add_option("-o,--output", out_path, "output TSV (default stdout)");

  // select-landmarks / build-tree
  std::string routes_path, raw_routes_path, significance_path, algorithm = "greedy";
  bool relax = false;
  auto add_selection = [&](CLI::App* cmd) {
    cmd->add_option("--landmarks", landmarks_path)->required()->check(CLI::ExistingFile);
    cmd->add_option("--routes", routes_path, "landmark-id routes TSV")->check(CLI::ExistingFile);
    cmd->add_option("--raw-routes", raw_routes_path, "coordinate routes TSV")->check(CLI::ExistingFile);
    cmd->add_option("--significance", significance_path, "override significances")->check(CLI::ExistingFile);
    cmd->add_option("--algorithm", algorithm, "brute | ils | greedy")
        ->check(CLI::IsMember({"brute", "ils", "greedy"}));
    cmd->add_flag("--relax-min-size", relax, "drop the ceil(log2 n) lower bound");
    cmd->add_option("-o,--output", out_path);
  };
  auto* select = app.add_subcommand("select-landmarks", "choose the question landmarks for a candidate set");
  add_selection(select);
  auto* tree = app.add_subcommand("build-tree", "order the selected landmarks into a question tree");
  add_selection(tree);

  // train-pmf / accumulate / rank-workers
  std::string factors_path, matrix_path, task_landmarks;
  auto* train = app.add_subcommand("train-pmf", "factorize the worker-landmark familiarity matrix");
  train->add_option("--landmarks", landmarks_path)->required()->check(CLI::ExistingFile);
  train->add_option("--workers", workers_path)->required()->check(CLI::ExistingFile);
  train->add_option("-o,--output", out_path, "factors JSON");

  auto* accumulate = app.add_subcommand("accumulate", "predict and spatially accumulate familiarity");
  accumulate->add_option("--landmarks", landmarks_path)->required()->check(CLI::ExistingFile);
  accumulate->add_option("--workers", workers_path)->required()->check(CLI::ExistingFile);
  accumulate->add_option("--factors", factors_path, "factors JSON from train-pmf")->required()->check(CLI::ExistingFile);
  accumulate->add_option("-o,--output", out_path, "matrix JSON");

  double deadline_hours = 24.0;
  std::size_t k = 0;
  auto* rank = app.add_subcommand("rank-workers", "rank eligible workers for a task by rated voting");
  rank->add_option("--matrix", matrix_path, "accumulated matrix JSON")->required()->check(CLI::ExistingFile);
  rank->add_option("--workers", workers_path)->required()->check(CLI::ExistingFile);
  rank->add_option("--task-landmarks", task_landmarks, "comma-separated landmark ids")->required();
  rank->add_option("--deadline-hours", deadline_hours);
  rank->add_option("-k", k, "workers to pick (default from config)");

  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  double tick_seconds = 30.0;
  auto* serve = app.add_subcommand("serve", "run the JSON API");
  serve->add_option("--db", db, "store path");
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--tick-seconds", tick_seconds, "deadline and retry sweep period")->check(CLI::PositiveNumber);

  // simulate
  std::uint64_t seed = 1;
  cr::sim::WorldSizes sizes;
  double accuracy = 1.0, slope = -1.0;
  std::string summary_path;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic world and run it through the pipeline");
  simulate->add_option("--seed", seed);
  simulate->add_option("--landmarks", sizes.landmarks);
  simulate->add_option("--workers", sizes.workers);
  simulate->add_option("--requests", sizes.requests);
  simulate->add_option("--accuracy", accuracy, "constant answer accuracy in [0.5, 1]");
  simulate->add_option("--familiarity-slope", slope, "use familiarity-driven accuracy instead");
  simulate->add_option("-k", k, "workers per task (default from config)");
  simulate->add_option("--report", out_path, "per-request TSV (default stdout)");
  simulate->add_option("--summary", summary_path, "summary TSV (default stderr)");

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = config_at(config_path);
    if (*ingest) {
      cr::TaskService service(config, cr::KvStore::open(db));
      if (!landmarks_path.empty()) service.ingest_landmarks(cr::io::parse_landmarks(cr::io::read_text(landmarks_path)));
      if (!checkins_path.empty()) {
        const auto events = cr::io::parse_checkins(cr::io::read_text(checkins_path));
        const auto result = service.ingest_checkins(events);
        std::cerr << "significance: " << result.iterations << " iterations, converged=" << result.converged << '\n';
      }
      if (!workers_path.empty()) service.ingest_workers(cr::io::parse_workers(cr::io::read_text(workers_path)));
      if (retrain) {
        const auto f = service.retrain();
        std::cerr << "pmf: " << f.iterations << " iterations, objective " << f.objective << '\n';
      }
      std::cout << service.landmarks().size() << " landmarks, " << service.workers().size() << " workers\n";
    } else if (*significance) {
      const cr::LandmarkIndex index(cr::io::parse_landmarks(cr::io::read_text(landmarks_path)));
      const auto events = cr::io::parse_checkins(cr::io::read_text(checkins_path));
      const auto result = cr::infer_significance(cr::VisitGraph::build(events, index), config.hits);
      emit(cr::io::format_significance(result.scores), out_path);
    } else if (*select || *tree) {
      if (routes_path.empty() && raw_routes_path.empty()) throw CLI::ValidationError("--routes or --raw-routes is required");
      const auto index = load_index(landmarks_path, significance_path);
      const auto routes = load_routes(routes_path, raw_routes_path, index, config.snap_radius_km);
      const cr::SelectionProblem problem(routes, index.significance_map(),
                                         {.relax_min_size = relax || config.relax_min_size});
      const auto result = cr::select_landmarks(problem, cr::parse_selection_algorithm(algorithm));
      if (*select) {
        std::ostringstream out;
        out << "algorithm\t" << cr::to_string(result.algorithm) << "\nvalue\t" << result.value << "\nselected\t";
        for (std::size_t i = 0; i < result.chosen.size(); ++i) out << (i ? " " : "") << result.chosen[i];
        out << "\nnodes_expanded\t" << result.stats.nodes_expanded << "\nsets_tested\t" << result.stats.sets_tested
            << '\n';
        emit(out.str(), out_path);
      } else {
        const cr::LandmarkSet chosen(result.chosen.begin(), result.chosen.end());
        const auto t = cr::build_tree(chosen, routes, index.significance_map());
        emit(t.to_json() + '\n', out_path);
        std::cerr << "depth " << t.depth() << ", expected questions " << t.expected_questions() << '\n';
      }
    } else if (*train || *accumulate) {
      const cr::LandmarkIndex index(cr::io::parse_landmarks(cr::io::read_text(landmarks_path)));
      const auto workers = cr::io::parse_workers(cr::io::read_text(workers_path));
      const auto observed = cr::build_matrix(workers, index, config.familiarity);
      if (*train) {
        const auto f = cr::train_pmf(observed, config.pmf);
        emit(cr::io::format_factors(f), out_path);
        std::cerr << "pmf: " << f.iterations << " iterations, objective " << f.objective << ", rank "
                  << f.effective_rank << '\n';
      } else {
        const auto f = cr::io::parse_factors(cr::io::read_text(factors_path));
        if (f.workers != observed.workers() || f.landmarks != observed.landmarks()) {
          throw cr::Error(cr::ErrorCode::kDimensionMismatch, "factors were trained on different workers or landmarks");
        }
        const auto m = cr::accumulate(cr::predict_matrix(f, observed), index, config.familiarity.eta_dis_km);
        emit(cr::io::format_matrix(m), out_path);
      }
    } else if (*rank) {
      const auto m = cr::io::parse_accumulated(cr::io::read_text(matrix_path));
      const auto workers = cr::io::parse_workers(cr::io::read_text(workers_path));
      const auto ids = split_ids(task_landmarks);
      const auto ranking = cr::top_k_workers(ids, m, workers, config.eligibility, deadline_hours,
                                             k ? k : config.eligibility.k);
      std::ostringstream out;
      out << "rank\tworker\ttotal\tselected\tbreakdown\n";
      for (std::size_t i = 0; i < ranking.tally.size(); ++i) {
        std::string breakdown;
        for (const auto& [l, v] : ranking.tally[i].breakdown) {
          breakdown += (breakdown.empty() ? "" : ",") + l + "=" + std::to_string(v);
        }
        out << i + 1 << '\t' << ranking.tally[i].id << '\t' << ranking.tally[i].total << '\t'
            << (i < ranking.top.size() ? 1 : 0) << '\t' << (breakdown.empty() ? "-" : breakdown) << '\n';
      }
      emit(out.str(), out_path);
      if (ranking.shortfall) std::cerr << "shortfall: fewer eligible workers than k\n";
    } else if (*serve) {
      cr::TaskService service(config, cr::KvStore::open(db));
      cr::ApiServer server(service);
      const int bound = server.bind(host, port);
      std::atomic<bool> running{true};
      std::thread ticker([&] {
        const auto period = std::chrono::duration<double>(tick_seconds);
        auto next = std::chrono::steady_clock::now() + period;
        while (running) {
          std::this_thread::sleep_for(std::chrono::milliseconds(200));
          if (std::chrono::steady_clock::now() < next) continue;
          next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
          try {
            service.tick();
          } catch (const std::exception& e) {
            std::cerr << "tick failed: " << e.what() << '\n';
          }
        }
      });
      std::cerr << "listening on " << host << ':' << bound << '\n';
      server.serve();
      running = false;
      ticker.join();
    } else if (*simulate) {
      const auto world = cr::sim::generate_world(seed, sizes);
      const auto behavior =
          slope >= 0.0 ? cr::sim::BehaviorModel::familiarity(slope) : cr::sim::BehaviorModel::constant(accuracy);
      cr::sim::ScenarioConfig scenario;
      scenario.engine = config;
      if (k) scenario.engine.eligibility.k = k;
      scenario.seed = seed;
      const auto report = cr::sim::run_scenario(world, behavior, scenario);
      emit(cr::sim::format_rows(report), out_path);
      const auto summary = cr::sim::format_summary(report.summary);
      if (summary_path.empty()) {
        std::cerr << summary;
      } else {
        cr::io::write_text(summary_path, summary);
      }
    }
  } catch (const cr::Error& e) {
    std::cerr << "error [" << cr::to_string(e.code()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  }
  return 0;
}
