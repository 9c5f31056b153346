#include "lexd_cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "lexd/bridge.hpp"
#include "lexd/corpus.hpp"
#include "lexd/embed.hpp"
#include "lexd/error.hpp"
#include "lexd/lda.hpp"
#include "lexd/ngram.hpp"
#include "lexd/score_table.hpp"
#include "lexd/stats.hpp"
#include "lexd/surprisal.hpp"
#include "lexd/synth.hpp"
#include "lexd/version.hpp"

namespace lexd::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- files ---------------------------------------------------------------

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void ensure_parent(const fs::path& path) {
  const auto parent = path.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void write_file(const fs::path& path, const std::string& bytes) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << bytes;
  if (!out) throw DataError("write failed for " + path.string());
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---- manifests -----------------------------------------------------------

struct Manifest {
  std::string command;
  ojson flags = ojson::object();
  ojson inputs = ojson::object();
  std::optional<std::uint64_t> seed;
  ojson outputs = ojson::array();
  ojson extra = ojson::object();

  void input(const std::string& role, const fs::path& path, const std::string& bytes) {
    inputs[role] = {{"path", path.generic_string()}, {"sha256", sha256_hex(bytes)}};
  }

  void write(const fs::path& path) const {
    ojson j;
    j["tool"] = "lexd";
    j["version"] = std::string(kVersion);
    j["command"] = command;
    j["flags"] = flags;
    j["inputs"] = inputs;
    j["seed"] = seed ? ojson(*seed) : ojson(nullptr);
    j["outputs"] = outputs;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    j["timestamp"] = utc_timestamp();
    write_file(path, j.dump(2) + "\n");
  }
};

fs::path manifest_path_for(const fs::path& output) {
  return fs::path(output.string() + ".manifest.json");
}

// Every long option of `sub` with its resolved value.
ojson resolved_flags(const CLI::App& sub) {
  ojson flags = ojson::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help") continue;
    const auto& name = names.front();
    if (opt->get_type_size() == 0) {
      flags[name] = opt->count() > 0 || opt->as<bool>();
    } else if (opt->count() > 0) {
      flags[name] = opt->as<std::string>();
    } else {
      flags[name] = opt->get_default_str();
    }
  }
  return flags;
}

// ---- shared options ------------------------------------------------------

struct CorpusOptions {
  std::string path;
  std::string diagnoses = "HC,SZ";
  std::string bprs_range = "18:67";

  CorpusFilter filter() const {
    CorpusFilter f;
    try {
      f.diagnoses = parse_diagnosis_list(diagnoses);
      const auto [lo, hi] = parse_bprs_range(bprs_range);
      f.bprs_min = lo;
      f.bprs_max = hi;
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    return f;
  }
};

void add_corpus_options(CLI::App* sub, CorpusOptions& o) {
  sub->add_option("--corpus", o.path, "Line-delimited JSON transcript file")->required();
  sub->add_option("--diagnoses", o.diagnoses, "Diagnosis groups to keep, comma separated");
  sub->add_option("--bprs-range", o.bprs_range, "Inclusive BPRS total range lo:hi");
}

struct LoadedCorpus {
  std::string bytes;
  std::vector<Session> sessions;
};

LoadedCorpus load(const CorpusOptions& o, Manifest& m) {
  const auto filter = o.filter();
  LoadedCorpus c;
  c.bytes = read_file(o.path);
  std::istringstream in(c.bytes);
  c.sessions = load_corpus(in, filter);
  m.input("corpus", o.path, c.bytes);
  return c;
}

unsigned resolve_jobs(unsigned jobs) {
  if (jobs != 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---- subcommands ---------------------------------------------------------

struct IngestCheck {
  CorpusOptions corpus;
  std::string out;

  int run(const CLI::App& sub, std::ostream& os) const {
    Manifest m;
    m.command = "ingest-check";
    m.flags = resolved_flags(sub);
    const auto filter = corpus.filter();
    const auto bytes = read_file(corpus.path);
    m.input("corpus", corpus.path, bytes);
    std::istringstream in(bytes);
    const auto records = read_records(in);
    CorpusFilter everything;
    everything.diagnoses = {Diagnosis::HC, Diagnosis::SZ, Diagnosis::MDD};
    everything.bprs_min = kBprsScaleMin;
    everything.bprs_max = kBprsScaleMax;
    const auto all = build_sessions(records, everything);
    const auto kept = build_sessions(records, filter);

    std::size_t subject = 0;
    for (const auto& r : records) subject += r.speaker == Speaker::Subject;
    ojson groups = ojson::object();
    std::size_t utterances = 0, sentences = 0, tokens = 0, with_bprs = 0;
    for (const auto& s : kept) {
      auto& g = groups[std::string(to_string(s.diagnosis))];
      if (g.is_null()) g = {{"sessions", 0}, {"utterances", 0}};
      g["sessions"] = g["sessions"].get<std::size_t>() + 1;
      g["utterances"] = g["utterances"].get<std::size_t>() + s.utterances.size();
      with_bprs += s.bprs_total.has_value();
      for (const auto& u : s.utterances) {
        ++utterances;
        sentences += u.sentences.size();
        tokens += u.word_count();
      }
    }
    ojson report;
    report["records"] = records.size();
    report["subject_records"] = subject;
    report["interviewer_records"] = records.size() - subject;
    report["sessions_total"] = all.size();
    report["sessions_kept"] = kept.size();
    report["sessions_with_bprs"] = with_bprs;
    report["utterances"] = utterances;
    report["sentences"] = sentences;
    report["tokens"] = tokens;
    report["groups"] = groups;
    os << report.dump(2) << "\n";
    if (!out.empty()) {
      write_file(out, report.dump(2) + "\n");
      m.outputs.push_back(out);
      m.write(manifest_path_for(out));
    }
    return kExitOk;
  }
};

struct TrainLm {
  CorpusOptions corpus;
  int order = 3;
  double discount = 0.75;
  int min_count = 2;
  std::string smoothing = "kn";
  std::string out = "models/model.lm";

  int run(const CLI::App& sub, std::ostream& os) const {
    Manifest m;
    m.command = "train-lm";
    m.flags = resolved_flags(sub);
    NgramOptions opts;
    opts.order = order;
    opts.discount = discount;
    opts.min_count = min_count;
    try {
      opts.smoothing = parse_smoothing(smoothing);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    const auto c = load(corpus, m);
    const auto docs = utterance_token_lists(c.sessions);
    std::optional<NgramModel> trained;
    try {
      trained = NgramModel::train(docs, opts);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const auto& model = *trained;
    const auto bytes = model.serialize();
    write_file(out, std::string(bytes.begin(), bytes.end()));
    m.outputs.push_back(out);
    m.extra["vocabulary_size"] = model.vocabulary().size();
    m.extra["training_sequences"] = docs.size();
    m.write(manifest_path_for(out));
    os << "wrote " << out << " (" << model.vocabulary().size() << " types, order " << order << ")\n";
    return kExitOk;
  }
};

struct TrainLda {
  CorpusOptions corpus;
  int topics = 20;
  std::optional<double> alpha;
  double beta = 0.01;
  int iters = 1000;
  std::uint64_t seed = 7;
  std::string out = "models/model.lda";

  int run(const CLI::App& sub, std::ostream& os) const {
    Manifest m;
    m.command = "train-lda";
    m.flags = resolved_flags(sub);
    m.seed = seed;
    LdaOptions opts;
    opts.topics = topics;
    opts.alpha = alpha;
    opts.beta = beta;
    opts.iterations = iters;
    opts.seed = seed;
    const auto c = load(corpus, m);
    const auto docs = utterance_token_lists(c.sessions);
    std::optional<TopicModel> model;
    try {
      model = train_lda(docs, opts);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    write_file(out, model->to_json());
    m.outputs.push_back(out);
    m.extra["documents"] = docs.size();
    m.extra["vocabulary_size"] = model->vocabulary().size();
    m.write(manifest_path_for(out));
    os << "wrote " << out << " (" << topics << " topics, " << docs.size() << " documents)\n";
    return kExitOk;
  }
};

struct Score {
  CorpusOptions corpus;
  std::string metric = "surprisal";
  std::string provider = "builtin";
  std::string lm = "models/model.lm";
  std::string lda = "models/model.lda";
  std::uint32_t dim = kDefaultEmbedDim;
  std::string replay;
  std::string bridge_cmd;
  std::size_t min_sentences = 3;
  int fold_in_iters = 100;
  std::uint64_t seed = 7;
  bool prompt_context = false;
  unsigned jobs = 1;
  std::string out;

  void check(const CLI::App& sub, Metric m) const {
    const auto given = [&](const char* name) { return sub.get_option(name)->count() > 0; };
    if (provider != "builtin" && provider != "replay" && provider != "bridge") {
      throw UsageError("unknown provider '" + provider + "' (builtin, replay or bridge)");
    }
    if (given("--replay") && provider != "replay") throw UsageError("--replay conflicts with --provider " + provider);
    if (given("--bridge-cmd") && provider != "bridge") {
      throw UsageError("--bridge-cmd conflicts with --provider " + provider);
    }
    if (provider == "replay" && replay.empty()) throw UsageError("--provider replay needs --replay <file>");
    if (provider == "bridge" && bridge_cmd.empty()) throw UsageError("--provider bridge needs --bridge-cmd <command>");
    if (given("--lm") && (m != Metric::Surprisal || provider != "builtin")) {
      throw UsageError("--lm only applies to --metric surprisal with the builtin provider");
    }
    if (given("--lda") && m != Metric::LdaCoherence) throw UsageError("--lda only applies to --metric lda-coherence");
    if (given("--dim") && (m != Metric::EmbedCoherence || provider != "builtin")) {
      throw UsageError("--dim only applies to --metric embed-coherence with the builtin provider");
    }
    if (m == Metric::LdaCoherence && provider != "builtin") {
      throw UsageError("lda-coherence is computed in-process; --provider must be builtin");
    }
    if (given("--prompt-context") && m != Metric::Surprisal) {
      throw UsageError("--prompt-context only applies to --metric surprisal");
    }
    if (dim == 0) throw UsageError("--dim must be positive");
  }

  int run(const CLI::App& sub, std::ostream& os) const {
    Metric m;
    try {
      m = parse_metric(metric);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    check(sub, m);
    const fs::path out_path = out.empty() ? fs::path("scores") / (std::string(to_string(m)) + ".csv") : fs::path(out);

    Manifest man;
    man.command = "score";
    man.flags = resolved_flags(sub);
    man.flags["out"] = out_path.generic_string();
    const auto c = load(corpus, man);
    const auto workers = resolve_jobs(jobs);

    std::shared_ptr<BridgeClient> bridge;
    if (provider == "bridge") {
      bridge = BridgeClient::launch(bridge_cmd);
      const auto& caps = bridge->capabilities();
      man.extra["bridge"] = {{"provider", caps.provider},
                             {"log_base", caps.log_base},
                             {"embedding_dim", caps.embedding_dim},
                             {"max_context", caps.max_context}};
    }

    std::vector<ScoreRow> rows;
    std::optional<SkipReport> skips;
    if (m == Metric::Surprisal) {
      std::unique_ptr<TokenProbabilityProvider> p;
      if (provider == "builtin") {
        const auto bytes = read_file(lm);
        man.input("lm", lm, bytes);
        auto model = std::make_shared<NgramModel>(NgramModel::deserialize(
            std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size())));
        p = std::make_unique<NgramProvider>(std::move(model));
      } else if (provider == "replay") {
        man.input("replay", replay, read_file(replay));
        p = ReplayLogProbProvider::load(replay);
      } else {
        p = std::make_unique<BridgeTokenProvider>(bridge);
      }
      SurprisalOptions opts;
      opts.prompt_context = prompt_context;
      const auto scores = score_corpus(*p, c.sessions, opts, workers);
      rows = surprisal_rows(scores);
      man.extra["utterances_scored"] = scores.size();
    } else {
      std::vector<CoherenceResult> results;
      if (m == Metric::LdaCoherence) {
        man.seed = seed;
        const auto text = read_file(lda);
        man.input("lda", lda, text);
        const auto model = TopicModel::from_json(text);
        LdaCoherenceOptions opts;
        opts.min_sentences = min_sentences;
        opts.fold_in_iterations = fold_in_iters;
        opts.seed = seed;
        results = lda_coherence_corpus(model, c.sessions, opts, workers);
      } else {
        std::unique_ptr<EmbeddingProvider> p;
        if (provider == "builtin") {
          p = std::make_unique<BuiltinEmbeddingProvider>(dim);
        } else if (provider == "replay") {
          man.input("replay", replay, read_file(replay));
          p = ReplayEmbeddingProvider::load(replay);
        } else {
          p = std::make_unique<BridgeEmbeddingProvider>(bridge);
        }
        results = embed_coherence_corpus(*p, c.sessions, min_sentences, workers);
      }
      SkipReport report;
      for (const auto& r : results) report.add(r);
      rows = coherence_rows(results);
      skips = std::move(report);
    }

    std::ostringstream csv;
    write_scores(csv, rows);
    write_file(out_path, csv.str());
    man.outputs.push_back(out_path.generic_string());
    if (skips) {
      fs::path skip_path = out_path;
      skip_path.replace_extension(".skips.csv");
      std::ostringstream sk;
      write_skips(sk, *skips);
      write_file(skip_path, sk.str());
      man.outputs.push_back(skip_path.generic_string());
      ojson by_reason = ojson::object();
      for (const auto& [reason, n] : skips->skipped_by_reason) by_reason[std::string(to_string(reason))] = n;
      man.extra["coherence"] = {{"scored", skips->scored},
                                {"skipped", skips->skipped()},
                                {"total", skips->total()},
                                {"skipped_by_reason", by_reason}};
    }
    man.write(manifest_path_for(out_path));
    os << "wrote " << out_path.generic_string() << " (" << rows.size() << " rows";
    if (skips) os << ", " << skips->scored << " scored, " << skips->skipped() << " skipped";
    os << ")\n";
    return kExitOk;
  }
};

struct Analyze {
  CorpusOptions corpus;
  std::string scores = "scores";
  std::string out = "analysis";
  int trend_halfwidth = 5;
  std::size_t trend_min_support = 3;
  std::size_t min_sessions = 3;

  // Metric of a score file: its manifest if present, the file stem otherwise.
  static Metric metric_of(const fs::path& file) {
    const auto manifest = manifest_path_for(file);
    if (fs::exists(manifest)) {
      try {
        const auto j = nlohmann::json::parse(read_file(manifest));
        return parse_metric(j.at("flags").at("metric").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        throw DataError("unreadable manifest " + manifest.string() + ": " + e.what());
      } catch (const std::invalid_argument& e) {
        throw DataError("manifest " + manifest.string() + ": " + e.what());
      }
    }
    try {
      return parse_metric(file.stem().string());
    } catch (const std::invalid_argument&) {
      throw DataError("cannot tell which metric " + file.string() + " holds (no manifest, unknown file name)");
    }
  }

  int run(const CLI::App& sub, std::ostream& os) const {
    if (trend_halfwidth < 0) throw UsageError("--trend-halfwidth must be >= 0");
    Manifest man;
    man.command = "analyze";
    man.flags = resolved_flags(sub);
    const auto c = load(corpus, man);

    if (!fs::is_directory(scores)) throw DataError("scores directory " + scores + " does not exist");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(scores)) {
      const auto name = e.path().filename().string();
      if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
      if (name.size() >= 10 && name.ends_with(".skips.csv")) continue;
      files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());

    std::map<Metric, std::vector<Observation>> obs;
    for (const auto& f : files) {
      const auto metric = metric_of(f);
      if (obs.contains(metric)) throw DataError("more than one score file for metric " + std::string(to_string(metric)));
      const auto text = read_file(f);
      man.input(std::string(to_string(metric)), f, text);
      std::istringstream in(text);
      std::vector<ScoreRow> rows;
      try {
        rows = read_scores(in);
      } catch (const DataError& e) {
        throw DataError(f.string() + ": " + e.what());
      }
      obs[metric] = observations(rows, metric);
    }
    if (obs.empty()) throw DataError("no score files in " + scores);

    const fs::path dir(out);
    fs::create_directories(dir);
    ojson omitted = ojson::object();
    auto emit = [&](const std::string& name, const std::string& body) {
      write_file(dir / name, body);
      man.outputs.push_back((dir / name).generic_string());
    };

    std::map<Metric, GroupMeans> means;
    std::vector<GroupMeans> tables;
    for (const auto& [metric, o] : obs) {
      means[metric] = group_means(o, c.sessions, std::string(to_string(metric)));
      tables.push_back(means[metric]);
    }
    {
      std::ostringstream s;
      write_group_means(s, tables);
      emit("group_means.csv", s.str());
    }

    if (obs.contains(Metric::LdaCoherence) && obs.contains(Metric::EmbedCoherence)) {
      try {
        const auto agreement = method_agreement(obs[Metric::LdaCoherence], obs[Metric::EmbedCoherence]);
        std::ostringstream a, b;
        write_method_agreement(a, agreement);
        write_agreement_summary(b, agreement);
        emit("method_agreement.csv", a.str());
        emit("method_agreement_summary.csv", b.str());
      } catch (const Error& e) {
        omitted["method_agreement.csv"] = e.what();
      }
    } else {
      omitted["method_agreement.csv"] = "needs both lda-coherence and embed-coherence scores";
    }

    if (obs.contains(Metric::Surprisal) &&
        (obs.contains(Metric::LdaCoherence) || obs.contains(Metric::EmbedCoherence))) {
      std::vector<GroupRelation> relations;
      for (const Metric coh : {Metric::LdaCoherence, Metric::EmbedCoherence}) {
        if (!means.contains(coh)) continue;
        for (auto r : group_relation(means[Metric::Surprisal].sessions, means[coh].sessions, min_sessions)) {
          r.coherence_metric = std::string(to_string(coh));
          relations.push_back(std::move(r));
        }
      }
      std::ostringstream s;
      write_group_relation(s, relations);
      emit("group_relation.csv", s.str());
    } else {
      omitted["group_relation.csv"] = "needs surprisal and at least one coherence metric";
    }

    TrendOptions topts;
    topts.window_halfwidth = trend_halfwidth;
    topts.min_support = trend_min_support;
    for (const auto& [metric, gm] : means) {
      const auto name = "severity_trend_" + std::string(to_string(metric)) + ".csv";
      try {
        const auto points = severity_trend(gm.sessions, topts);
        std::ostringstream s;
        write_severity_trend(s, points);
        emit(name, s.str());
      } catch (const DataError& e) {
        omitted[name] = e.what();
      }
    }

    if (!omitted.empty()) man.extra["omitted"] = omitted;
    man.write(dir / "manifest.json");
    os << "wrote " << man.outputs.size() << " tables to " << dir.generic_string() << "\n";
    for (auto it = omitted.begin(); it != omitted.end(); ++it) {
      os << "omitted " << it.key() << ": " << it.value().get<std::string>() << "\n";
    }
    return kExitOk;
  }
};

struct Simulate {
  std::size_t sessions = 40;
  std::size_t utterances = 10;
  double severity = 0.0;
  double p_repeat = 0.2;
  double p_insert = 0.2;
  double p_intrude = 0.3;
  bool scale_by_bprs = false;
  std::uint64_t seed = 7;
  std::string out = "synth.jsonl";

  int run(const CLI::App& sub, std::ostream& os) const {
    Manifest m;
    m.command = "simulate";
    m.flags = resolved_flags(sub);
    m.seed = seed;
    if (sessions == 0 || utterances == 0) throw UsageError("--sessions and --utterances must be positive");
    DisruptionConfig cfg;
    cfg.severity = severity;
    cfg.p_repeat = p_repeat;
    cfg.p_insert = p_insert;
    cfg.p_intrude = p_intrude;
    cfg.seed = seed;
    cfg.scale_by_bprs = scale_by_bprs;
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const auto base = generate_base(sessions, utterances, default_topic_pools(), seed);
    const auto corpus = apply_disruption(base, cfg);
    std::ostringstream s;
    write_records(s, corpus.to_records());
    write_file(out, s.str());
    m.outputs.push_back(out);
    m.extra["tokens"] = corpus.token_count();
    m.extra["utterances"] = corpus.utterance_count();
    m.write(manifest_path_for(out));
    os << "wrote " << out << " (" << sessions << " sessions, " << corpus.utterance_count() << " utterances)\n";
    return kExitOk;
  }
};

std::string env_name(const std::string& flag) {
  std::string out = "LEXD_";
  for (char ch : flag) out.push_back(ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  return out;
}

void bind_environment(CLI::App* sub) {
  for (CLI::Option* opt : sub->get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help") continue;
    opt->envname(env_name(names.front()));
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"lexd: surprisal and coherence analytics for transcribed speech", "lexd"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  app.footer("Environment: every option may be set as LEXD_<OPTION> (e.g. LEXD_CORPUS, LEXD_JOBS).");

  IngestCheck ingest;
  auto* s_ingest = app.add_subcommand("ingest-check", "Validate a corpus file and print a summary");
  add_corpus_options(s_ingest, ingest.corpus);
  s_ingest->add_option("--out", ingest.out, "Also write the summary JSON here");

  TrainLm tlm;
  auto* s_lm = app.add_subcommand("train-lm", "Train the reference n-gram language model");
  add_corpus_options(s_lm, tlm.corpus);
  s_lm->add_option("--order", tlm.order, "N-gram order");
  s_lm->add_option("--discount", tlm.discount, "Absolute discount in (0,1)");
  s_lm->add_option("--min-count", tlm.min_count, "Tokens rarer than this become <unk>");
  s_lm->add_option("--smoothing", tlm.smoothing, "kn or mle");
  s_lm->add_option("--out", tlm.out, "Model file");

  TrainLda tlda;
  auto* s_lda = app.add_subcommand("train-lda", "Train the LDA topic model");
  add_corpus_options(s_lda, tlda.corpus);
  s_lda->add_option("--topics", tlda.topics, "Number of topics K");
  s_lda->add_option("--alpha", tlda.alpha, "Document-topic prior (default 50/K)");
  s_lda->add_option("--beta", tlda.beta, "Topic-word prior");
  s_lda->add_option("--iters", tlda.iters, "Gibbs sweeps");
  s_lda->add_option("--seed", tlda.seed, "Sampler seed");
  s_lda->add_option("--out", tlda.out, "Model file");

  Score score;
  auto* s_score = app.add_subcommand("score", "Score utterances with one metric");
  add_corpus_options(s_score, score.corpus);
  s_score->add_option("--metric", score.metric, "surprisal, lda-coherence or embed-coherence");
  s_score->add_option("--provider", score.provider, "builtin, replay or bridge");
  s_score->add_option("--lm", score.lm, "n-gram model for the builtin surprisal provider");
  s_score->add_option("--lda", score.lda, "LDA model for lda-coherence");
  s_score->add_option("--dim", score.dim, "Dimension of the builtin hashed embedding");
  s_score->add_option("--replay", score.replay, "Precomputed log-probabilities or vectors");
  s_score->add_option("--bridge-cmd", score.bridge_cmd, "Shell command starting a bridge server");
  s_score->add_option("--min-sentences", score.min_sentences, "Coherence skips shorter utterances");
  s_score->add_option("--fold-in-iters", score.fold_in_iters, "LDA fold-in sweeps per sentence");
  s_score->add_option("--seed", score.seed, "LDA fold-in seed");
  s_score->add_flag("--prompt-context", score.prompt_context, "Condition surprisal on the interviewer prompt");
  s_score->add_option("--jobs", score.jobs, "Parallel scoring workers (0 = all cores)");
  s_score->add_option("--out", score.out, "Score CSV (default scores/<metric>.csv)");

  Analyze analyze;
  auto* s_analyze = app.add_subcommand("analyze", "Group, agreement, relation and severity tables");
  add_corpus_options(s_analyze, analyze.corpus);
  s_analyze->add_option("--scores", analyze.scores, "Directory of score CSVs");
  s_analyze->add_option("--out", analyze.out, "Output directory");
  s_analyze->add_option("--trend-halfwidth", analyze.trend_halfwidth, "Severity window half-width in BPRS points");
  s_analyze->add_option("--trend-min-support", analyze.trend_min_support, "Sessions needed per window");
  s_analyze->add_option("--min-sessions", analyze.min_sessions, "Sessions needed per group regression");

  Simulate sim;
  auto* s_sim = app.add_subcommand("simulate", "Write a synthetic corpus with controlled disruption");
  s_sim->add_option("--sessions", sim.sessions, "Number of sessions");
  s_sim->add_option("--utterances", sim.utterances, "Utterances per session");
  s_sim->add_option("--severity", sim.severity, "Disruption severity s in [0,1]");
  s_sim->add_option("--p-repeat", sim.p_repeat, "Per-word repetition rate at s = 1");
  s_sim->add_option("--p-insert", sim.p_insert, "Per-word off-topic insertion rate at s = 1");
  s_sim->add_option("--p-intrude", sim.p_intrude, "Per-sentence topic intrusion rate at s = 1");
  s_sim->add_flag("--scale-by-bprs", sim.scale_by_bprs, "Scale severity by each session's BPRS");
  s_sim->add_option("--seed", sim.seed, "Generator seed");
  s_sim->add_option("--out", sim.out, "Corpus file");

  for (auto* sub : {s_ingest, s_lm, s_lda, s_score, s_analyze, s_sim}) bind_environment(sub);

  std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    if (chosen == s_ingest) return ingest.run(*chosen, out);
    if (chosen == s_lm) return tlm.run(*chosen, out);
    if (chosen == s_lda) return tlda.run(*chosen, out);
    if (chosen == s_score) return score.run(*chosen, out);
    if (chosen == s_analyze) return analyze.run(*chosen, out);
    return sim.run(*chosen, out);
  } catch (const UsageError& e) {
    err << "lexd " << chosen->get_name() << ": " << e.what() << "\n\n" << chosen->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "lexd " << chosen->get_name() << ": error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace lexd::cli
