#include "factflow/service.hpp"

#include <fmt/format.h>

#include <chrono>
#include <fstream>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "factflow/anonymizer.hpp"
#include "factflow/text.hpp"

namespace factflow::service {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  fs::create_directories(path.parent_path());
  static std::atomic<unsigned> counter{0};
  auto tmp = path;
  tmp += fmt::format(".tmp{}-{}", std::hash<std::thread::id>{}(std::this_thread::get_id()), counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io, fmt::format("cannot write {}", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::io, fmt::format("cannot write {}", path.string()));
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

class RecordingLive : public agent::Transport {
 public:
  explicit RecordingLive(const fs::path& dir) : live_(agent::LiveConfig::from_env()), record_(live_, dir, true) {}
  std::string complete(const std::string& prompt) override { return record_.complete(prompt); }
  std::string_view mode() const override { return "record"; }

 private:
  agent::LiveTransport live_;
  agent::RecordTransport record_;
};

std::string now() { return agent::utc_timestamp(std::chrono::system_clock::now()); }

bool valid_sheet_id(const std::string& id) {
  static const std::regex kUuid("[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}");
  return std::regex_match(id, kUuid);
}

bool valid_dataset_id(const std::string& id) {
  static const std::regex kId("ds-[0-9a-f]{16}");
  return std::regex_match(id, kId);
}

json schema_of(const ingest::Dataset& ds) {
  json cols = json::array();
  for (const auto& c : ds.columns) {
    json col{{"name", c.name}, {"data_class", c.data_class ? std::string(ingest::to_string(*c.data_class)) : ""}};
    if (c.entity_type) col["entity_type"] = *c.entity_type;
    cols.push_back(col);
  }
  return cols;
}

std::string generation_report(const std::vector<workers::FactOutcome>& outcomes) {
  std::vector<std::string> lines;
  for (const auto& o : outcomes)
    lines.push_back(fmt::format("{} ({}): {}", o.idea.id, o.idea.content, o.error.empty() ? "no card" : o.error));
  return text::join(lines, "\n");
}

struct RunArtifacts {
  agent::RunLog log;
  workers::EnvelopeTrail trail;
  fs::path dir;

  explicit RunArtifacts(fs::path d) : log((fs::create_directories(d), d / "runlog.jsonl")), dir(std::move(d)) {}

  void flush() {
    json arr = json::array();
    for (const auto& e : trail.envelopes()) arr.push_back(agent::to_json(e));
    auto path = dir / "envelopes.json";
    // Edits append to the trail of the generation run.
    if (fs::exists(path)) {
      try {
        auto old = json::parse(read_file(path));
        if (old.is_array()) {
          for (auto& e : arr) old.push_back(std::move(e));
          arr = std::move(old);
        }
      } catch (const json::exception&) {
      }
    }
    write_file_atomic(path, arr.dump(2) + "\n");
  }
};

}  // namespace

std::unique_ptr<agent::Transport> make_transport(std::string_view mode, const fs::path& fixtures) {
  if (mode == "live") return std::make_unique<agent::LiveTransport>(agent::LiveConfig::from_env());
  if (mode == "replay") return std::make_unique<agent::ReplayTransport>(fixtures);
  if (mode == "record") return std::make_unique<RecordingLive>(fixtures);
  throw Error(ErrorKind::validation, fmt::format("unknown transport mode \"{}\"", mode));
}

SheetService::SheetService(Options options, agent::Transport& transport)
    : options_(std::move(options)), transport_(transport), blocks_(options_.workspace) {
  fs::create_directories(options_.workspace / "datasets");
  fs::create_directories(options_.workspace / "sheets");
}

SheetService::~SheetService() { wait_idle(); }

DatasetRecord SheetService::add_dataset(std::string_view csv, std::string name) {
  name = text::trim(name);
  if (name.empty()) name = "dataset";
  auto ds = ingest::classify_columns(ingest::load_csv(csv, name));
  DatasetRecord rec;
  rec.id = "ds-" + text::sha256_hex(name + "\n" + std::string(csv)).substr(0, 16);
  rec.name = name;
  rec.schema = schema_of(ds);
  auto dir = options_.workspace / "datasets" / rec.id;
  write_file_atomic(dir / "data.csv", csv);
  write_file_atomic(dir / "meta.json",
                    json{{"id", rec.id}, {"name", rec.name}, {"rows", ds.row_count}, {"schema", rec.schema}}.dump(2) +
                        "\n");
  return rec;
}

DatasetRecord SheetService::dataset(const std::string& id) const {
  auto meta = options_.workspace / "datasets" / id / "meta.json";
  if (!valid_dataset_id(id) || !fs::exists(meta)) throw Error(ErrorKind::not_found, fmt::format("no dataset \"{}\"", id));
  auto j = json::parse(read_file(meta));
  return {j.at("id"), j.at("name"), j.at("schema")};
}

ingest::Dataset SheetService::load_dataset(const std::string& id) const {
  auto rec = dataset(id);
  std::map<std::string, ingest::DataClass> classes;
  for (const auto& c : rec.schema)
    if (auto dc = ingest::parse_data_class(c.value("data_class", ""))) classes[c.at("name")] = *dc;
  return ingest::classify_columns(
      ingest::load_csv(read_file(options_.workspace / "datasets" / id / "data.csv"), rec.name), classes);
}

std::string SheetService::new_sheet_id() {
  static std::mutex mu;
  static std::random_device rd;
  std::array<unsigned char, 16> b{};
  {
    std::lock_guard lock(mu);
    for (auto& x : b) x = static_cast<unsigned char>(rd() & 0xff);
  }
  b[6] = static_cast<unsigned char>((b[6] & 0x0f) | 0x40);
  b[8] = static_cast<unsigned char>((b[8] & 0x3f) | 0x80);
  std::string hex;
  for (auto x : b) hex += fmt::format("{:02x}", x);
  return fmt::format("{}-{}-{}-{}-{}", hex.substr(0, 8), hex.substr(8, 4), hex.substr(12, 4), hex.substr(16, 4),
                     hex.substr(20));
}

fs::path SheetService::sheet_path(const std::string& sheet_id) const {
  return options_.workspace / "sheets" / (sheet_id + ".json");
}

fs::path SheetService::run_dir(const std::string& sheet_id) const { return options_.workspace / "runs" / sheet_id; }

std::mutex& SheetService::sheet_mutex(const std::string& sheet_id) {
  std::lock_guard lock(mu_);
  auto& m = sheet_locks_[sheet_id];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

void SheetService::set_status(const std::string& sheet_id, GenerationStatus st) {
  std::lock_guard lock(mu_);
  statuses_[sheet_id] = std::move(st);
}

sheet::FactSheet SheetService::generate(const std::string& dataset_id, const std::optional<std::string>& request,
                                        std::optional<std::uint64_t> seed, std::string sheet_id, StageFn on_stage) {
  auto stage = [&](std::string_view s) {
    if (on_stage) on_stage(s);
  };
  std::optional<std::string> req;
  if (request && !text::trim(*request).empty()) req = text::trim(*request);
  if (req) workers::reject_forecasting(*req);
  if (sheet_id.empty()) sheet_id = new_sheet_id();
  const std::uint64_t s = seed.value_or(options_.default_seed);

  stage("ingest");
  auto ds = load_dataset(dataset_id);
  stage("anonymize");
  auto map = anon::build_map(ds, s);
  stage("represent");
  auto rep = repr::build_representation(ds, map, options_.budget, s);

  RunArtifacts run(run_dir(sheet_id));
  workers::WorkerEnv env{transport_, &run.log, &run.trail, &blocks_};
  workers::DatasetContext ctx{ds, map, rep};
  try {
    stage("compose");
    auto ideas = workers::compose_fact_ideas(rep, req, env, options_.samples, options_.max_facts);
    stage("facts");
    auto outcomes = workers::build_facts(ideas, ctx, req, env, options_.threads);
    std::vector<FactCard> cards;
    for (const auto& o : outcomes)
      if (o.card) cards.push_back(*o.card);
    if (cards.empty()) {
      json report = json::array();
      for (const auto& o : outcomes)
        report.push_back({{"fact_id", o.idea.id},
                          {"content", o.idea.content},
                          {"error_kind", o.error_kind ? std::string(to_string(*o.error_kind)) : ""},
                          {"error", o.error}});
      throw Error(ErrorKind::generation, "no usable facts:\n" + generation_report(outcomes), report.dump());
    }
    stage("organize");
    auto structure = workers::organize_sheet(cards, ds, req, env);

    stage("layout");
    sheet::FactSheet sh;
    sh.id = sheet_id;
    sh.dataset_ref = dataset_id;
    sh.user_request = req;
    sh.seed = s;
    sh.structure = std::move(structure);
    for (auto& c : cards) {
      auto id = c.idea.id;
      sh.facts.emplace(id, std::move(c));
    }
    // Ideas are numbered f1..fN; later additions continue after the highest.
    sh.fact_counter = static_cast<std::int64_t>(ideas.size());
    sh.section_counter = static_cast<std::int64_t>(sh.structure.sections.size()) - 1;
    sh.created_at = sh.updated_at = now();
    sheet::relayout(sh);
    save(sh);
    run.flush();
    stage("done");
    return sh;
  } catch (...) {
    run.flush();
    throw;
  }
}

std::string SheetService::start_generation(const std::string& dataset_id, const std::optional<std::string>& request,
                                           std::optional<std::uint64_t> seed) {
  dataset(dataset_id);
  if (request) workers::reject_forecasting(*request);
  auto id = new_sheet_id();
  set_status(id, {});
  std::lock_guard lock(mu_);
  runs_.emplace_back([this, id, dataset_id, request, seed] {
    auto on_stage = [&](std::string_view st) {
      std::lock_guard l(mu_);
      statuses_[id].stage = std::string(st);
    };
    try {
      generate(dataset_id, request, seed, id, on_stage);
      std::lock_guard l(mu_);
      statuses_[id].done = true;
    } catch (const Error& e) {
      set_status(id, {"failed", true, e.kind(), e.what()});
    } catch (const std::exception& e) {
      set_status(id, {"failed", true, ErrorKind::io, e.what()});
    }
  });
  return id;
}

GenerationStatus SheetService::status(const std::string& sheet_id) const {
  {
    std::lock_guard lock(mu_);
    if (auto it = statuses_.find(sheet_id); it != statuses_.end()) return it->second;
  }
  if (exists(sheet_id)) return {"done", true, std::nullopt, ""};
  throw Error(ErrorKind::not_found, fmt::format("no sheet \"{}\"", sheet_id));
}

void SheetService::wait_idle() {
  std::vector<std::thread> runs;
  {
    std::lock_guard lock(mu_);
    runs.swap(runs_);
  }
  for (auto& t : runs) t.join();
}

bool SheetService::exists(const std::string& sheet_id) const {
  return valid_sheet_id(sheet_id) && fs::exists(sheet_path(sheet_id));
}

sheet::FactSheet SheetService::load(const std::string& sheet_id) const {
  if (!exists(sheet_id)) throw Error(ErrorKind::not_found, fmt::format("no sheet \"{}\"", sheet_id));
  json j;
  try {
    j = json::parse(read_file(sheet_path(sheet_id)));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, fmt::format("sheet {} is not valid JSON: {}", sheet_id, e.what()));
  }
  return sheet::sheet_from_json(j);
}

void SheetService::save(const sheet::FactSheet& s) {
  if (!valid_sheet_id(s.id)) throw Error(ErrorKind::validation, fmt::format("bad sheet id \"{}\"", s.id));
  write_file_atomic(sheet_path(s.id), sheet::to_json(s).dump(2) + "\n");
}

sheet::FactSheet SheetService::edit(const std::string& sheet_id, std::int64_t expected_revision,
                                    const std::vector<sheet::EditOp>& ops) {
  if (!exists(sheet_id)) throw Error(ErrorKind::not_found, fmt::format("no sheet \"{}\"", sheet_id));
  std::lock_guard lock(sheet_mutex(sheet_id));
  auto s = load(sheet_id);
  if (s.revision != expected_revision)
    throw Error(ErrorKind::conflict,
                fmt::format("sheet {} is at revision {}, not {}", sheet_id, s.revision, expected_revision));
  std::set<std::string> retitled;
  for (const auto& op : ops) {
    sheet::apply_edit(s, op);
    if (op.kind == sheet::EditKind::edit_text && op.field == "chart_title") retitled.insert(op.fact_id);
  }
  for (const auto& id : retitled) {
    auto it = s.facts.find(id);
    if (it == s.facts.end()) continue;
    it->second.chart_block = blocks_.put(chart::render(it->second.chart, it->second.table).svg_text);
  }
  if (!ops.empty()) {
    s.updated_at = now();
    save(s);
  }
  return s;
}

sheet::FactSheet SheetService::add_fact(const std::string& sheet_id, const std::string& request) {
  auto req = text::trim(request);
  if (req.empty()) throw Error(ErrorKind::validation, "the fact request is empty");
  if (!exists(sheet_id)) throw Error(ErrorKind::not_found, fmt::format("no sheet \"{}\"", sheet_id));
  workers::reject_forecasting(req);
  std::lock_guard lock(sheet_mutex(sheet_id));
  auto s = load(sheet_id);
  auto ds = load_dataset(s.dataset_ref);
  auto map = anon::build_map(ds, s.seed);
  auto rep = repr::build_representation(ds, map, options_.budget, s.seed);

  RunArtifacts run(run_dir(sheet_id));
  workers::WorkerEnv env{transport_, &run.log, &run.trail, &blocks_};
  workers::DatasetContext ctx{ds, map, rep};
  try {
    auto idea = workers::compose_single_fact(rep, req, env);
    auto outcome = workers::build_fact(idea, ctx, req, env);
    if (!outcome.card)
      throw Error(outcome.error_kind.value_or(ErrorKind::extraction),
                  fmt::format("could not build the requested fact: {}", outcome.error));
    auto section = workers::place_fact(s.structure, s.facts, *outcome.card, env);
    sheet::insert_fact(s, std::move(*outcome.card), section);
    s.revision += 1;
    s.updated_at = now();
    save(s);
    run.flush();
    return s;
  } catch (...) {
    run.flush();
    throw;
  }
}

std::string SheetService::export_sheet(const std::string& sheet_id, std::string_view format) const {
  if (format != "svg" && format != "pdf")
    throw Error(ErrorKind::validation, fmt::format("unknown export format \"{}\"; use svg or pdf", format));
  auto s = load(sheet_id);
  return format == "svg" ? sheet::export_svg(s) : sheet::export_pdf(s);
}

}  // namespace factflow::service
