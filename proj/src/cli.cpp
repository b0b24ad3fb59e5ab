#include "spamhmm/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "spamhmm/analysis.hpp"
#include "spamhmm/cluster.hpp"
#include "spamhmm/coburst.hpp"
#include "spamhmm/datamodel.hpp"
#include "spamhmm/error.hpp"
#include "spamhmm/eval.hpp"
#include "spamhmm/hmm.hpp"
#include "spamhmm/lhmm.hpp"
#include "spamhmm/synth.hpp"

namespace spamhmm {

namespace {

struct Options {
  std::string input, output, params, kind = "coburst", model = "lhmm", truth, labels, report, csv;
  std::string stat, rest_a, rest_b;
  std::uint64_t seed = 1;
  std::int64_t omega = kDefaultOmegaSeconds;
  std::size_t folds = 5, bins = 50, smooth_days = 14;
  bool split_by_label = false, uniform_transitions = false;
  int max_iter = 200;
  double tol = 1e-6;
  unsigned threads = 1;
  SynthConfig synth;
};

// Writes to the --output file, or to the given stream when the path is empty.
void emit(const std::string& path, std::ostream& fallback, const std::string& text) {
  if (path.empty()) {
    fallback << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  f << text;
  if (!f) throw ValidationError("failed writing '" + path + "'");
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return read_key_values(in);
}

BaumWelchConfig em_config(const Options& o) {
  BaumWelchConfig c;
  c.max_iter = o.max_iter;
  c.tol = o.tol;
  c.threads = o.threads;
  return c;
}

StateAnnotatedDataset annotate_from_file(Dataset ds, const std::string& params_path, unsigned threads) {
  const KeyValues kv = load_key_values(params_path);
  if (kv.count("prior")) return annotate_states(std::move(ds), lhmm_params_from_keys(kv), threads);
  return annotate_states(std::move(ds), params_from_keys(kv), threads);
}

void cmd_ingest(const Options& o, std::ostream& out) {
  const Dataset ds = load_dataset(o.input);
  const auto labels = user_labels(ds);
  std::size_t labeled = 0;
  for (const auto& r : ds.reviews()) labeled += r.label ? 1 : 0;
  if (!o.output.empty()) {
    std::ostringstream dump;
    write_reviews_csv(dump, ds);
    emit(o.output, out, dump.str());
  }
  out << "reviews = " << ds.size() << '\n'
      << "users = " << ds.by_user().size() << '\n'
      << "restaurants = " << ds.by_restaurant().size() << '\n'
      << "labeled_reviews = " << labeled << '\n'
      << "labeled_users = " << labels.size() << '\n';
}

void cmd_synth(const Options& o, std::ostream& out) {
  SynthConfig cfg = o.synth;
  cfg.seed = o.seed;
  const SynthTruth truth = gen_dataset(cfg);
  std::ostringstream data;
  const bool jsonl = o.output.size() > 6 && o.output.substr(o.output.size() - 6) == ".jsonl";
  if (jsonl)
    write_reviews_jsonl(data, truth.dataset);
  else
    write_reviews_csv(data, truth.dataset);
  emit(o.output, out, data.str());
  if (!o.truth.empty()) {
    std::ostringstream users, states;
    write_truth_users_csv(users, truth);
    write_truth_states_csv(states, truth);
    emit(o.truth + "_users.csv", out, users.str());
    emit(o.truth + "_states.csv", out, states.str());
  }
}

void cmd_fit(const Options& o, std::ostream& out) {
  const auto sequences = build_user_sequences(load_dataset(o.input));
  std::ostringstream text;
  if (o.model == "hmm") {
    BaumWelchConfig c = em_config(o);
    if (o.uniform_transitions) {
      HmmParams init = initial_params(sequences);
      init.trans = {{{0.5, 0.5}, {0.5, 0.5}}};
      c.init = init;
      c.fixed_transitions = true;
    }
    write_params(text, baum_welch_fit(sequences, c));
  } else {
    LhmmConfig c;
    c.em = em_config(o);
    c.uniform_transitions = o.uniform_transitions;
    write_lhmm_params(text, lhmm_fit(sequences, c));
  }
  emit(o.output, out, text.str());
}

void cmd_classify(const Options& o, std::ostream& out) {
  const auto sequences = build_user_sequences(load_dataset(o.input));
  const LhmmParams params = lhmm_params_from_keys(load_key_values(o.params));
  std::ostringstream text;
  text << "user_id,predicted,log_posterior_spam,log_posterior_genuine,spam_log_odds\n";
  for (const auto& r : lhmm_classify_all(sequences, params, o.threads))
    text << csv_escape(r.user_id) << ',' << to_string(r.predicted) << ',' << format_double(r.log_posterior_spam) << ','
         << format_double(r.log_posterior_genuine) << ',' << format_double(r.spam_log_odds) << '\n';
  emit(o.output, out, text.str());
}

void cmd_decode(const Options& o, std::ostream& out) {
  const auto ads = annotate_from_file(load_dataset(o.input), o.params, o.threads);
  std::ostringstream text;
  write_states_csv(text, ads);
  emit(o.output, out, text.str());
}

void cmd_build_graph(const Options& o, std::ostream& out) {
  Dataset ds = load_dataset(o.input);
  UserGraph g;
  if (o.kind == "coreview") {
    g = build_coreview_graph(ds);
  } else {
    if (o.params.empty()) throw ValidationError("--params is required for a co-burst graph");
    CoburstConfig cfg;
    cfg.omega = o.omega;
    cfg.threads = o.threads;
    g = build_coburst_graph(annotate_from_file(std::move(ds), o.params, o.threads), cfg);
  }
  std::ostringstream text;
  write_graph_tsv(text, g);
  emit(o.output, out, text.str());
}

void cmd_cluster(const Options& o, std::ostream& out) {
  std::ifstream in(o.input);
  if (!in) throw ValidationError("cannot open '" + o.input + "'");
  const UserGraph g = read_graph_tsv(in);
  if (g.nodes.empty()) throw InsufficientDataError("graph has no edges to cluster");
  const Clustering c = louvain(WeightedGraph::from_user_graph(g), o.seed);
  std::ostringstream text;
  write_clustering_tsv(text, g.nodes, c);
  emit(o.output, out, text.str());
  if (!o.labels.empty()) {
    const auto q = cluster_quality(c, label_nodes(g.nodes, user_labels(load_dataset(o.labels))));
    std::ostringstream rep;
    write_quality(rep, q);
    emit(o.report, out, rep.str());
  }
}

void cmd_evaluate(const Options& o, std::ostream& out) {
  CrossValidationConfig cfg;
  cfg.folds = o.folds;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  cfg.model.em = em_config(o);
  cfg.model.uniform_transitions = o.uniform_transitions;
  const auto report = cross_validate(load_dataset(o.input), cfg);
  std::ostringstream text;
  write_report_text(text, report);
  emit(o.output, out, text.str());
  if (!o.csv.empty()) {
    std::ostringstream csv;
    write_report_csv(csv, report);
    emit(o.csv, out, csv.str());
  }
}

void cmd_stats(const Options& o, std::ostream& out) {
  Dataset ds = load_dataset(o.input);
  std::ostringstream text;
  if (o.stat == "histogram") {
    write_histogram_csv(text, interarrival_histogram(ds, o.bins, o.split_by_label));
  } else if (o.stat == "state-means") {
    if (o.params.empty()) throw ValidationError("--params is required for state-means");
    write_state_means_csv(text, user_state_means(annotate_from_file(std::move(ds), o.params, o.threads)));
  } else if (o.stat == "pairs") {
    write_pairs_csv(text, consecutive_pairs(ds), o.split_by_label);
  } else {
    if (o.rest_a.empty() || o.rest_b.empty()) throw ValidationError("--rest-a and --rest-b are required");
    text << "rest_a,rest_b,smooth_days,pearson_r\n"
         << csv_escape(o.rest_a) << ',' << csv_escape(o.rest_b) << ',' << o.smooth_days << ','
         << format_double(restaurant_correlation(ds, o.rest_a, o.rest_b, o.smooth_days)) << '\n';
  }
  emit(o.output, out, text.str());
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Temporal review-spam modeling: two-mode HMM, labeled HMM and co-bursting networks", "spamhmm"};
  app.require_subcommand(1);

  auto input = [&](CLI::App* c) { c->add_option("-i,--input", o.input, "Input file")->required(); };
  auto output = [&](CLI::App* c, bool required) {
    if (required)
      c->add_option("-o,--output", o.output, "Output file")->required();
    else
      c->add_option("-o,--output", o.output, "Output file (default: stdout)");
  };
  auto em = [&](CLI::App* c) {
    c->add_option("--max-iter", o.max_iter, "Maximum EM iterations")->capture_default_str();
    c->add_option("--tol", o.tol, "Relative log-likelihood tolerance")->capture_default_str();
    c->add_flag("--uniform-transitions", o.uniform_transitions, "Fix transitions to uniform rows (ablation)");
  };
  auto threads = [&](CLI::App* c) {
    c->add_option("--threads", o.threads, "Worker threads (0 = all cores)")->capture_default_str();
  };

  auto* ingest = app.add_subcommand("ingest-validate", "Validate a review file and print a summary");
  input(ingest);
  output(ingest, false);

  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic review dataset");
  output(synth, true);
  synth->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  synth->add_option("--truth", o.truth, "Write <prefix>_users.csv and <prefix>_states.csv");
  synth->add_option("--genuine", o.synth.n_genuine, "Genuine users")->capture_default_str();
  synth->add_option("--spammers", o.synth.n_spammers, "Spammers")->capture_default_str();
  synth->add_option("--restaurants", o.synth.n_restaurants, "Restaurants")->capture_default_str();
  synth->add_option("--reviews-per-user", o.synth.reviews_per_user, "Mean reviews per user")->capture_default_str();
  synth->add_option("--groups", o.synth.n_groups, "Spam groups")->capture_default_str();
  synth->add_option("--targets", o.synth.campaign.targets_per_group, "Target restaurants per group")->capture_default_str();
  synth->add_option("--bursts", o.synth.campaign.bursts_per_group, "Bursts per group")->capture_default_str();
  synth->add_option("--burst-window", o.synth.campaign.burst_window_seconds, "Burst window (seconds)")->capture_default_str();
  synth->add_option("--raised-fraction", o.synth.raised_fraction, "Share of spammers with a farming phase")
      ->capture_default_str();

  auto* fit = app.add_subcommand("fit", "Fit a labeled HMM (or a single HMM) with Baum-Welch");
  input(fit);
  output(fit, false);
  fit->add_option("--model", o.model, "lhmm or hmm")->check(CLI::IsMember({"lhmm", "hmm"}))->capture_default_str();
  em(fit);
  threads(fit);

  auto* classify = app.add_subcommand("classify", "Classify users with a fitted labeled HMM");
  input(classify);
  output(classify, false);
  classify->add_option("-p,--params", o.params, "Labeled HMM parameter file")->required();
  threads(classify);

  auto* decode = app.add_subcommand("decode", "Viterbi-decode the hidden state of every review");
  input(decode);
  output(decode, false);
  decode->add_option("-p,--params", o.params, "HMM or labeled HMM parameter file")->required();
  threads(decode);

  auto* graph = app.add_subcommand("build-graph", "Build the co-burst or co-review user graph");
  input(graph);
  output(graph, false);
  graph->add_option("--kind", o.kind, "coburst or coreview")
      ->check(CLI::IsMember({"coburst", "coreview"}))
      ->capture_default_str();
  graph->add_option("-p,--params", o.params, "HMM or labeled HMM parameter file (coburst)");
  graph->add_option("--omega", o.omega, "Co-burst window in seconds")->check(CLI::PositiveNumber)->capture_default_str();
  threads(graph);

  auto* cluster = app.add_subcommand("cluster", "Louvain clustering of a user graph");
  input(cluster);
  output(cluster, false);
  cluster->add_option("--seed", o.seed, "Node-order seed")->capture_default_str();
  cluster->add_option("--labels", o.labels, "Review file whose labels score the clustering");
  cluster->add_option("--report", o.report, "Quality report file (default: stdout)");

  auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validation of the labeled HMM");
  input(evaluate);
  output(evaluate, false);
  evaluate->add_option("--folds", o.folds, "Number of folds")->capture_default_str();
  evaluate->add_option("--seed", o.seed, "Split seed")->capture_default_str();
  evaluate->add_option("--csv", o.csv, "Also write a per-fold CSV");
  em(evaluate);
  threads(evaluate);

  auto* stats = app.add_subcommand("stats", "Analysis exports for plotting");
  stats->add_option("kind", o.stat, "histogram, state-means, pairs or correlation")
      ->required()
      ->check(CLI::IsMember({"histogram", "state-means", "pairs", "correlation"}));
  input(stats);
  output(stats, false);
  stats->add_option("--bins", o.bins, "Histogram bins")->capture_default_str();
  stats->add_flag("--split-by-label", o.split_by_label, "Separate spam and genuine series");
  stats->add_option("-p,--params", o.params, "Parameter file (state-means)");
  stats->add_option("--rest-a", o.rest_a, "First restaurant (correlation)");
  stats->add_option("--rest-b", o.rest_b, "Second restaurant (correlation)");
  stats->add_option("--smooth-days", o.smooth_days, "Moving-average width in days")->capture_default_str();
  threads(stats);

  std::vector<const char*> argv{"spamhmm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Subcommand help requests surface as CallForHelp from the subcommand parser.
    err << "error: " << e.what() << "\n" << "run 'spamhmm --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (*ingest) cmd_ingest(o, out);
    else if (*synth) cmd_synth(o, out);
    else if (*fit) cmd_fit(o, out);
    else if (*classify) cmd_classify(o, out);
    else if (*decode) cmd_decode(o, out);
    else if (*graph) cmd_build_graph(o, out);
    else if (*cluster) cmd_cluster(o, out);
    else if (*evaluate) cmd_evaluate(o, out);
    else if (*stats) cmd_stats(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace spamhmm
