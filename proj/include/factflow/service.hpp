#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "factflow/error.hpp"
#include "factflow/ingest.hpp"
#include "factflow/representation.hpp"
#include "factflow/sheet.hpp"
#include "factflow/transport.hpp"
#include "factflow/workers.hpp"
#include "json.hpp"

namespace factflow::service {

struct Options {
  std::filesystem::path workspace;
  std::size_t budget = repr::kDefaultBudget;
  int samples = workers::kDefaultSamples;
  std::size_t max_facts = workers::kDefaultMaxFacts;
  unsigned threads = 4;
  std::uint64_t default_seed = 7;
};

struct DatasetRecord {
  std::string id;
  std::string name;
  nlohmann::json schema;  // [{name, data_class, entity_type?}]
};

// Pipeline stages in run order; "failed" replaces "done" when a run aborts.
inline constexpr std::string_view kStages[] = {"queued",    "ingest", "anonymize", "represent", "compose",
                                               "facts",     "organize", "layout",  "done"};

struct GenerationStatus {
  std::string stage = "queued";
  bool done = false;
  std::optional<ErrorKind> error_kind;
  std::string error;
};

using StageFn = std::function<void(std::string_view stage)>;

// Workspace layout:
//   datasets/<id>/data.csv, meta.json
//   sheets/<sheet id>.json
//   blocks/<sha256>
//   runs/<sheet id>/runlog.jsonl, envelopes.json
class SheetService {
 public:
  SheetService(Options options, agent::Transport& transport);
  ~SheetService();
  SheetService(const SheetService&) = delete;
  SheetService& operator=(const SheetService&) = delete;

  const Options& options() const { return options_; }

  // Parses and classifies the CSV; throws CsvError on malformed input.
  DatasetRecord add_dataset(std::string_view csv, std::string name);
  DatasetRecord dataset(const std::string& id) const;
  ingest::Dataset load_dataset(const std::string& id) const;

  std::string new_sheet_id();

  // Runs the whole pipeline and persists the result under sheet_id (a fresh
  // id when empty).
  sheet::FactSheet generate(const std::string& dataset_id, const std::optional<std::string>& request,
                            std::optional<std::uint64_t> seed, std::string sheet_id = {}, StageFn on_stage = {});
  // Same on a background thread; poll status() with the returned id.
  std::string start_generation(const std::string& dataset_id, const std::optional<std::string>& request,
                               std::optional<std::uint64_t> seed);
  GenerationStatus status(const std::string& sheet_id) const;
  void wait_idle();

  bool exists(const std::string& sheet_id) const;
  sheet::FactSheet load(const std::string& sheet_id) const;
  void save(const sheet::FactSheet& s);

  // All ops apply or none. Throws Error(conflict) when the sheet has moved
  // past expected_revision.
  sheet::FactSheet edit(const std::string& sheet_id, std::int64_t expected_revision,
                        const std::vector<sheet::EditOp>& ops);
  sheet::FactSheet add_fact(const std::string& sheet_id, const std::string& request);

  // format: svg | pdf
  std::string export_sheet(const std::string& sheet_id, std::string_view format) const;

  std::filesystem::path run_dir(const std::string& sheet_id) const;

 private:
  std::mutex& sheet_mutex(const std::string& sheet_id);
  void set_status(const std::string& sheet_id, GenerationStatus st);
  std::filesystem::path sheet_path(const std::string& sheet_id) const;

  Options options_;
  agent::Transport& transport_;
  agent::BlockStore blocks_;

  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> sheet_locks_;
  std::map<std::string, GenerationStatus> statuses_;
  std::vector<std::thread> runs_;
};

// Writes through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

// Owns the transport picked by mode: live, record (live plus fixture
// writing) or replay.
std::unique_ptr<agent::Transport> make_transport(std::string_view mode, const std::filesystem::path& fixtures);

}  // namespace factflow::service
