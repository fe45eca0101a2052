#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "factflow/agent.hpp"
#include "factflow/anonymizer.hpp"
#include "factflow/error.hpp"
#include "factflow/ingest.hpp"
#include "factflow/model.hpp"
#include "factflow/representation.hpp"
#include "factflow/sql.hpp"
#include "factflow/transport.hpp"

namespace factflow::workers {

inline constexpr int kDefaultSamples = 3;
inline constexpr std::size_t kDefaultMaxFacts = 12;
inline constexpr int kMaxSqlAttempts = 3;
inline constexpr std::size_t kMaxStatementWords = 60;
inline constexpr std::size_t kMaxAnswerWords = 50;
inline constexpr std::size_t kMaxCausalQas = 2;
inline constexpr std::size_t kMinSections = 2;
inline constexpr std::size_t kMaxSections = 5;
inline constexpr std::string_view kFallbackTopic = "Findings";

// Every message handed to a worker, in send order.
class EnvelopeTrail {
 public:
  void record(agent::Envelope e);
  std::vector<agent::Envelope> envelopes() const;

 private:
  mutable std::mutex mu_;
  std::vector<agent::Envelope> items_;
};

struct WorkerEnv {
  agent::Transport& transport;
  agent::RunLog* log = nullptr;
  EnvelopeTrail* trail = nullptr;
  agent::BlockStore* blocks = nullptr;  // rendered charts go here when set
};

struct DatasetContext {
  const ingest::Dataset& data;
  const anon::AnonymizationMap& map;
  const repr::DatasetRepresentation& rep;
};

// Wraps the payload in an envelope addressed to the profile, records it, and
// invokes the worker.
agent::Invocation call(WorkerEnv& env, std::string_view sender, const agent::WorkerProfile& profile,
                       nlohmann::json payload, agent::InvokeOptions options = {},
                       std::vector<std::string> block_refs = {});

// Throws Error(unsupported) for prediction and forecasting requests.
bool is_forecasting_request(std::string_view request);
void reject_forecasting(std::string_view request);

// fact type + sorted lower-case words of the content.
std::string fact_signature(FactType type, std::string_view content);

// Keeps ideas present in at least ceil(k/2) samples, ranked by mean
// significance (ties: first appearance), truncated to n_max, ids f1..fN.
std::vector<FactIdea> merge_samples(const std::vector<std::vector<FactIdea>>& samples, std::size_t n_max);

// Throws Error(generation) when no idea survives.
std::vector<FactIdea> compose_fact_ideas(const repr::DatasetRepresentation& rep,
                                         const std::optional<std::string>& request, WorkerEnv& env,
                                         int k = kDefaultSamples, std::size_t n_max = kDefaultMaxFacts);

// The request turned into exactly one idea.
FactIdea compose_single_fact(const repr::DatasetRepresentation& rep, const std::string& request, WorkerEnv& env);

struct Extraction {
  std::string sql;  // after de-anonymization
  sql::ResultTable table;
  int attempts = 0;
};

// Advise, then up to kMaxSqlAttempts generations, each executed locally.
// Throws Error(extraction) with the last SQL in the detail.
Extraction extract_data(const FactIdea& idea, const DatasetContext& ctx, const std::optional<std::string>& request,
                        WorkerEnv& env);

// bar (text x, numeric y), else line (integer x, numeric y), else scatter
// (two numeric), else bar on the first two columns.
ChartParams fallback_chart(const FactIdea& idea, const sql::ResultTable& table);

// Throws Error(validation) for tables with fewer than two columns.
ChartParams choose_chart(const FactIdea& idea, const sql::ResultTable& table, WorkerEnv& env);

struct Writing {
  std::string statement;
  std::vector<CausalQA> causal_qas;
  bool templated = false;
};

// Numbers in the statement that the table does not support.
std::vector<std::string> ungrounded_numbers(std::string_view statement, const sql::ResultTable& table);
std::vector<std::string> writing_problems(const nlohmann::json& output, const sql::ResultTable& table);

Writing write_fact(const FactIdea& idea, const sql::ResultTable& table, const ChartParams& chart, WorkerEnv& env,
                   std::vector<std::string> block_refs = {});

// A finished fact or the reason it was dropped.
struct FactOutcome {
  FactIdea idea;
  std::optional<FactCard> card;
  std::optional<ErrorKind> error_kind;
  std::string error;
};

// extract, chart and write for one idea. Never throws for per-fact failures
// except Error(fixture_missing) and Error(transport), which abort the run.
FactOutcome build_fact(const FactIdea& idea, const DatasetContext& ctx, const std::optional<std::string>& request,
                       WorkerEnv& env);
// Runs build_fact over the ideas on up to `threads` threads; output order
// follows the input.
std::vector<FactOutcome> build_facts(const std::vector<FactIdea>& ideas, const DatasetContext& ctx,
                                     const std::optional<std::string>& request, WorkerEnv& env,
                                     unsigned threads = 1);

std::string introduction_text(const ingest::Dataset& ds, const std::optional<std::string>& request);

// Empty when the sections are a valid grouping of exactly these ids.
std::vector<std::string> partition_problems(const nlohmann::json& output, const std::vector<std::string>& fact_ids);

// Introduction plus the organizer's topics; a single "Findings" section in
// rank order when the organizer cannot produce a partition.
SheetStructure organize_sheet(const std::vector<FactCard>& facts, const ingest::Dataset& ds,
                              const std::optional<std::string>& request, WorkerEnv& env);

// Id of the topical section for a new fact; the last one when the placer's
// answer is unusable. The structure must hold at least one topical section.
std::string place_fact(const SheetStructure& structure, const std::map<std::string, FactCard>& facts,
                       const FactCard& card, WorkerEnv& env);

}  // namespace factflow::workers
