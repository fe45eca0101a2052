#include "factflow/workers.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <set>
#include <thread>

#include "factflow/chart.hpp"
#include "factflow/text.hpp"

namespace factflow::workers {

using nlohmann::json;

void EnvelopeTrail::record(agent::Envelope e) {
  std::lock_guard lock(mu_);
  items_.push_back(std::move(e));
}

std::vector<agent::Envelope> EnvelopeTrail::envelopes() const {
  std::lock_guard lock(mu_);
  return items_;
}

namespace {

// 8-4-4-4-12 hex id derived from the message content.
std::string content_id(std::string_view sender, std::string_view recipient, const json& payload) {
  std::string h = text::sha256_hex(fmt::format("{}\n{}\n{}", sender, recipient, payload.dump()));
  return fmt::format("{}-{}-{}-{}-{}", h.substr(0, 8), h.substr(8, 4), h.substr(12, 4), h.substr(16, 4),
                     h.substr(20, 12));
}

json idea_payload(const FactIdea& idea) {
  return {{"id", idea.id}, {"fact_type", std::string(to_string(idea.fact_type))}, {"content", idea.content}};
}

void add_request(json& payload, const std::optional<std::string>& request) {
  if (request && !text::trim(*request).empty()) payload["request"] = *request;
}

json columns_payload(const repr::DatasetRepresentation& rep) {
  json cols = json::array();
  for (const auto& c : rep.columns)
    cols.push_back({{"name", c.name}, {"data_class", std::string(ingest::to_string(c.data_class))}});
  return cols;
}

json result_columns(const sql::ResultTable& t) {
  json cols = json::array();
  for (const auto& c : t.columns) cols.push_back({{"name", c.name}, {"type", std::string(sql::to_string(c.type))}});
  return cols;
}

constexpr std::size_t kTableRowsInPrompt = 25;

std::optional<FactIdea> idea_from_output(const json& f) {
  auto type = parse_fact_type(f.value("fact_type", ""));
  std::string content = text::trim(f.value("content", ""));
  if (!type || content.empty()) return std::nullopt;
  return FactIdea{"", *type, content, std::clamp(f.value("significance", 0.0), 0.0, 1.0)};
}

std::vector<std::string> composer_problems(const json& out) {
  std::vector<std::string> problems;
  const auto& facts = out.at("facts");
  for (std::size_t i = 0; i < facts.size(); ++i) {
    const auto& f = facts[i];
    if (text::trim(f.value("content", "")).empty()) problems.push_back(fmt::format("facts[{}].content is empty", i));
    double s = f.value("significance", 0.0);
    if (!(s >= 0 && s <= 1)) problems.push_back(fmt::format("facts[{}].significance must lie in [0, 1]", i));
  }
  return problems;
}

}  // namespace

agent::Invocation call(WorkerEnv& env, std::string_view sender, const agent::WorkerProfile& profile, json payload,
                       agent::InvokeOptions options, std::vector<std::string> block_refs) {
  if (!options.log) options.log = env.log;
  if (env.trail) {
    auto e = agent::make_envelope(content_id(sender, profile.name, payload), std::string(sender), profile, payload,
                                  std::move(block_refs), env.blocks,
                                  agent::utc_timestamp(std::chrono::system_clock::now()));
    env.trail->record(std::move(e));
  }
  return agent::invoke(profile, payload, env.transport, options);
}

bool is_forecasting_request(std::string_view request) {
  std::string lower = text::to_lower(request);
  static const char* kStems[] = {"predict", "forecast", "future", "extrapolat", "projection",
                                 "next year", "next month", "next decade", "coming year", "will be"};
  for (const char* s : kStems)
    if (lower.find(s) != std::string::npos) return true;
  return false;
}

void reject_forecasting(std::string_view request) {
  if (is_forecasting_request(request))
    throw Error(ErrorKind::unsupported,
                "forecasting and prediction are not supported; ask about patterns already in the data",
                std::string(request));
}

std::string fact_signature(FactType type, std::string_view content) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : content) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  std::sort(words.begin(), words.end());
  return std::string(to_string(type)) + ":" + text::join(words, " ");
}

std::vector<FactIdea> merge_samples(const std::vector<std::vector<FactIdea>>& samples, std::size_t n_max) {
  struct Tally {
    FactIdea first;
    std::size_t order = 0;
    std::size_t samples = 0;
    double significance = 0;
  };
  std::map<std::string, Tally> tally;
  std::size_t order = 0;
  for (const auto& sample : samples) {
    std::set<std::string> seen;
    for (const auto& idea : sample) {
      auto sig = fact_signature(idea.fact_type, idea.content);
      if (!seen.insert(sig).second) continue;
      auto [it, fresh] = tally.try_emplace(sig);
      if (fresh) {
        it->second.first = idea;
        it->second.order = order;
      }
      ++order;
      it->second.samples += 1;
      it->second.significance += idea.significance;
    }
  }
  const std::size_t threshold = (samples.size() + 1) / 2;
  std::vector<const Tally*> kept;
  for (const auto& [sig, t] : tally)
    if (t.samples >= threshold) kept.push_back(&t);
  std::sort(kept.begin(), kept.end(), [](const Tally* a, const Tally* b) {
    double ma = a->significance / static_cast<double>(a->samples);
    double mb = b->significance / static_cast<double>(b->samples);
    if (ma != mb) return ma > mb;
    return a->order < b->order;
  });
  if (kept.size() > n_max) kept.resize(n_max);
  std::vector<FactIdea> out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    FactIdea idea = kept[i]->first;
    idea.id = fmt::format("f{}", i + 1);
    idea.significance = kept[i]->significance / static_cast<double>(kept[i]->samples);
    out.push_back(std::move(idea));
  }
  return out;
}

std::vector<FactIdea> compose_fact_ideas(const repr::DatasetRepresentation& rep,
                                         const std::optional<std::string>& request, WorkerEnv& env, int k,
                                         std::size_t n_max) {
  if (k < 1) throw Error(ErrorKind::validation, "sample count must be at least 1");
  if (n_max < 1) throw Error(ErrorKind::validation, "fact cap must be at least 1");
  const auto& profile = agent::builtin_profile("composer");
  std::vector<std::vector<FactIdea>> samples;
  for (int i = 1; i <= k; ++i) {
    json payload{{"dataset", rep.text()},
                 {"table", rep.table_name},
                 {"columns", columns_payload(rep)},
                 {"mode", "sheet"},
                 {"max_facts", n_max},
                 {"sample_index", i},
                 {"sample_count", k}};
    add_request(payload, request);
    agent::InvokeOptions opt;
    opt.check = composer_problems;
    opt.log_extra = {{"sample", i}};
    auto r = call(env, "pipeline", profile, std::move(payload), opt);
    std::vector<FactIdea> sample;
    for (const auto& f : r.output["facts"])
      if (auto idea = idea_from_output(f)) sample.push_back(std::move(*idea));
    samples.push_back(std::move(sample));
  }
  auto merged = merge_samples(samples, n_max);
  if (merged.empty())
    throw Error(ErrorKind::generation,
                "no fact idea was proposed consistently; try a broader request or no request at all");
  return merged;
}

FactIdea compose_single_fact(const repr::DatasetRepresentation& rep, const std::string& request, WorkerEnv& env) {
  if (text::trim(request).empty()) throw Error(ErrorKind::validation, "fact request is empty");
  reject_forecasting(request);
  const auto& profile = agent::builtin_profile("composer");
  json payload{{"dataset", rep.text()},
               {"table", rep.table_name},
               {"columns", columns_payload(rep)},
               {"request", request},
               {"mode", "single"},
               {"max_facts", 1},
               {"sample_index", 1},
               {"sample_count", 1}};
  agent::InvokeOptions opt;
  opt.check = [](const json& out) {
    auto problems = composer_problems(out);
    if (out["facts"].size() != 1) problems.push_back("single mode needs exactly one fact");
    return problems;
  };
  auto r = call(env, "editor", profile, std::move(payload), opt);
  auto idea = idea_from_output(r.output["facts"][0]);
  if (!idea) throw Error(ErrorKind::generation, "the request could not be turned into a fact idea");
  return *idea;
}

Extraction extract_data(const FactIdea& idea, const DatasetContext& ctx, const std::optional<std::string>& request,
                        WorkerEnv& env) {
  json base{{"dataset", ctx.rep.text()}, {"table", ctx.rep.table_name}, {"fact", idea_payload(idea)}};
  add_request(base, request);
  agent::InvokeOptions advise_opt;
  advise_opt.log_extra = {{"fact", idea.id}};
  auto advice = call(env, "composer", agent::builtin_profile("extractor_advisor"), base, advise_opt);

  const auto& profile = agent::builtin_profile("extractor");
  json previous = json::array();
  std::string last_sql;
  std::string last_problem;
  for (int attempt = 1; attempt <= kMaxSqlAttempts; ++attempt) {
    json payload = base;
    payload["recommendations"] = advice.output["recommendations"];
    payload["attempt"] = attempt;
    if (!previous.empty()) payload["previous"] = previous;
    agent::InvokeOptions opt;
    opt.max_repairs = 0;  // every reply counts as one generation attempt
    opt.log_extra = {{"fact", idea.id}, {"sql_attempt", attempt}};
    std::string generated;
    try {
      generated = call(env, "extractor_advisor", profile, payload, opt).output["sql"].get<std::string>();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::worker) throw;
      last_problem = e.what();
      previous.push_back({{"sql", ""}, {"problem", "reply was not a JSON object with an \"sql\" string"}});
      continue;
    }
    last_sql = anon::deanonymize_literals(generated, ctx.map);
    try {
      auto table = sql::run(last_sql, ctx.data);
      if (table.row_count() > 0) return {last_sql, std::move(table), attempt};
      last_problem = "the query returned no rows: " + sql::describe_result(table, 0);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::sql_parse && e.kind() != ErrorKind::sql_exec && e.kind() != ErrorKind::unsupported)
        throw;
      last_problem = e.what();
    }
    previous.push_back({{"sql", generated}, {"problem", last_problem}});
  }
  throw Error(ErrorKind::extraction,
              fmt::format("no usable data for fact {} after {} attempts: {}", idea.id, kMaxSqlAttempts, last_problem),
              last_sql);
}

ChartParams fallback_chart(const FactIdea& idea, const sql::ResultTable& table) {
  std::optional<std::size_t> first_text, first_integer, first_numeric, last_numeric;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    auto t = table.columns[i].type;
    if (t == sql::SqlType::text && !first_text) first_text = i;
    if (t == sql::SqlType::integer && !first_integer) first_integer = i;
    if (t == sql::SqlType::integer || t == sql::SqlType::real) {
      if (!first_numeric) first_numeric = i;
      last_numeric = i;
    }
  }
  auto last_numeric_except = [&](std::size_t skip) -> std::optional<std::size_t> {
    for (std::size_t i = table.columns.size(); i-- > 0;) {
      auto t = table.columns[i].type;
      if (i != skip && (t == sql::SqlType::integer || t == sql::SqlType::real)) return i;
    }
    return std::nullopt;
  };
  ChartParams p;
  std::size_t x = 0, y = 1;
  if (first_text && last_numeric) {
    p.chart_type = ChartType::bar;
    x = *first_text;
    y = *last_numeric;
  } else if (first_integer && last_numeric_except(*first_integer)) {
    p.chart_type = ChartType::line;
    x = *first_integer;
    y = *last_numeric_except(*first_integer);
  } else if (first_numeric && last_numeric_except(*first_numeric)) {
    p.chart_type = ChartType::scatter;
    x = *first_numeric;
    y = *last_numeric_except(*first_numeric);
  } else {
    p.chart_type = ChartType::bar;
  }
  p.x_field = table.columns.at(x).name;
  p.y_field = table.columns.at(y).name;
  p.x_label = p.x_field;
  p.y_label = p.y_field;
  p.title = idea.content;
  if (!p.title.empty() && p.title.back() == '.') p.title.pop_back();
  return p;
}

ChartParams choose_chart(const FactIdea& idea, const sql::ResultTable& table, WorkerEnv& env) {
  if (table.columns.size() < 2)
    throw Error(ErrorKind::validation, fmt::format("fact {}: a one-column table has nothing to encode against", idea.id));
  json payload{{"fact", idea_payload(idea)},
               {"table", sql::describe_result(table, kTableRowsInPrompt)},
               {"columns", result_columns(table)}};
  agent::InvokeOptions opt;
  opt.max_repairs = 1;
  opt.log_extra = {{"fact", idea.id}};
  opt.check = [&table](const json& out) {
    try {
      return chart::validate_params(chart_params_from_json(out), table);
    } catch (const Error& e) {
      return std::vector<std::string>{e.what()};
    }
  };
  try {
    auto r = call(env, "extractor", agent::builtin_profile("visualizer"), std::move(payload), opt);
    return chart_params_from_json(r.output);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::worker) throw;
    return fallback_chart(idea, table);
  }
}

namespace {

struct NumberToken {
  std::string text;  // as written, for messages
  double value = 0;
  int decimals = 0;
  double scale = 1;
  bool percent = false;
  bool ordinal = false;
};

std::vector<NumberToken> scan_numbers(std::string_view s) {
  std::vector<NumberToken> out;
  auto is_alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i]) || (i > 0 && (is_alnum(s[i - 1]) || s[i - 1] == '.'))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    bool negative = start > 0 && s[start - 1] == '-' && (start == 1 || !is_alnum(s[start - 2]));
    std::string digits;
    while (i < s.size()) {
      if (is_digit(s[i])) {
        digits.push_back(s[i++]);
      } else if (s[i] == ',' && i + 3 < s.size() && is_digit(s[i + 1]) && is_digit(s[i + 2]) && is_digit(s[i + 3]) &&
                 (i + 4 == s.size() || !is_digit(s[i + 4]))) {  // thousands separator
        ++i;
      } else {
        break;
      }
    }
    int decimals = 0;
    if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
      digits.push_back(s[i++]);
      while (i < s.size() && is_digit(s[i])) {
        digits.push_back(s[i++]);
        ++decimals;
      }
    }
    NumberToken tok;
    tok.text = std::string(s.substr(negative ? start - 1 : start, i - start + (negative ? 1 : 0)));
    tok.value = std::stod(digits) * (negative ? -1 : 1);
    tok.decimals = decimals;
    std::string rest = text::to_lower(s.substr(i, 12));
    auto starts = [&](std::string_view p) { return rest.rfind(p, 0) == 0; };
    if (starts("%") || starts(" percent") || starts(" per cent")) tok.percent = true;
    if (starts("st") || starts("nd") || starts("rd") || starts("th")) {
      if (rest.size() == 2 || !std::isalpha(static_cast<unsigned char>(rest[2]))) tok.ordinal = true;
    }
    if (starts(" thousand")) tok.scale = 1e3;
    if (starts(" million")) tok.scale = 1e6;
    if (starts(" billion")) tok.scale = 1e9;
    out.push_back(std::move(tok));
  }
  return out;
}

bool same_at(double candidate, const NumberToken& tok) {
  double v = candidate / tok.scale;
  return fmt::format("{:.{}f}", v, tok.decimals) == fmt::format("{:.{}f}", tok.value, tok.decimals) ||
         fmt::format("{:.{}f}", std::abs(v), tok.decimals) == fmt::format("{:.{}f}", tok.value, tok.decimals);
}

}  // namespace

std::vector<std::string> ungrounded_numbers(std::string_view statement, const sql::ResultTable& table) {
  std::vector<double> values;
  std::vector<double> shares;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    double sum = 0;
    bool numeric = false;
    for (const auto& row : table.rows) {
      const auto& v = row[c];
      if (v.is_numeric()) {
        values.push_back(v.as_real());
        sum += v.as_real();
        numeric = true;
      } else if (v.type() == sql::SqlType::text) {
        for (const auto& tok : scan_numbers(v.as_text())) values.push_back(tok.value);
      }
    }
    if (numeric && sum > 0)
      for (const auto& row : table.rows)
        if (row[c].is_numeric()) shares.push_back(100 * row[c].as_real() / sum);
  }
  values.push_back(static_cast<double>(table.row_count()));

  std::vector<std::string> out;
  for (const auto& tok : scan_numbers(statement)) {
    if (tok.ordinal && tok.value >= 1 && tok.value <= static_cast<double>(std::max<std::size_t>(table.row_count(), 1)))
      continue;
    const auto& pool = tok.percent ? shares : values;
    bool ok = std::any_of(pool.begin(), pool.end(), [&](double v) { return same_at(v, tok); });
    if (!ok && tok.percent)
      ok = std::any_of(values.begin(), values.end(), [&](double v) { return same_at(v, tok); });
    if (!ok) out.push_back(tok.text);
  }
  return out;
}

std::vector<std::string> writing_problems(const json& out, const sql::ResultTable& table) {
  std::vector<std::string> problems;
  std::string statement = text::trim(out.value("statement", ""));
  if (statement.empty()) problems.push_back("statement is empty");
  if (text::word_count(statement) > kMaxStatementWords)
    problems.push_back(fmt::format("statement has {} words, at most {} allowed", text::word_count(statement),
                                   kMaxStatementWords));
  for (const auto& n : ungrounded_numbers(statement, table))
    problems.push_back(fmt::format("statement number {} does not appear in the table", n));
  const auto& qas = out.at("causal_qas");
  if (qas.size() > kMaxCausalQas)
    problems.push_back(fmt::format("{} causal questions given, at most {} allowed", qas.size(), kMaxCausalQas));
  for (std::size_t i = 0; i < qas.size(); ++i) {
    std::string q = text::trim(qas[i].value("question", ""));
    std::string a = text::trim(qas[i].value("answer", ""));
    if (q.empty() || q.back() != '?') problems.push_back(fmt::format("causal_qas[{}].question must end with \"?\"", i));
    if (a.empty()) problems.push_back(fmt::format("causal_qas[{}].answer is empty", i));
    if (text::word_count(a) > kMaxAnswerWords)
      problems.push_back(fmt::format("causal_qas[{}].answer has {} words, at most {} allowed", i, text::word_count(a),
                                     kMaxAnswerWords));
  }
  return problems;
}

Writing write_fact(const FactIdea& idea, const sql::ResultTable& table, const ChartParams& chart, WorkerEnv& env,
                   std::vector<std::string> block_refs) {
  json payload{{"fact", idea_payload(idea)},
               {"table", sql::describe_result(table, kTableRowsInPrompt)},
               {"chart", to_json(chart)}};
  agent::InvokeOptions opt;
  opt.max_repairs = 1;
  opt.log_extra = {{"fact", idea.id}};
  opt.check = [&table](const json& out) { return writing_problems(out, table); };
  try {
    auto r = call(env, "visualizer", agent::builtin_profile("writer"), std::move(payload), opt, std::move(block_refs));
    Writing w;
    w.statement = text::trim(r.output["statement"].get<std::string>());
    for (const auto& qa : r.output["causal_qas"])
      w.causal_qas.push_back({text::trim(qa["question"].get<std::string>()), text::trim(qa["answer"].get<std::string>())});
    return w;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::worker) throw;
    return {fmt::format("{} by {}", chart.y_label.empty() ? chart.y_field : chart.y_label,
                        chart.x_label.empty() ? chart.x_field : chart.x_label),
            {},
            true};
  }
}

FactOutcome build_fact(const FactIdea& idea, const DatasetContext& ctx, const std::optional<std::string>& request,
                       WorkerEnv& env) {
  FactOutcome out;
  out.idea = idea;
  try {
    auto ex = extract_data(idea, ctx, request, env);
    FactCard card;
    card.idea = idea;
    card.sql = ex.sql;
    card.table = std::move(ex.table);
    card.chart = choose_chart(idea, card.table, env);
    auto rendered = chart::render(card.chart, card.table);
    std::vector<std::string> refs;
    if (env.blocks) {
      card.chart_block = env.blocks->put(rendered.svg_text);
      refs.push_back(card.chart_block);
    }
    auto w = write_fact(idea, card.table, card.chart, env, refs);
    card.statement = std::move(w.statement);
    card.causal_qas = std::move(w.causal_qas);
    out.card = std::move(card);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::fixture_missing || e.kind() == ErrorKind::transport || e.kind() == ErrorKind::io) throw;
    out.error_kind = e.kind();
    out.error = e.what();
  }
  return out;
}

std::vector<FactOutcome> build_facts(const std::vector<FactIdea>& ideas, const DatasetContext& ctx,
                                     const std::optional<std::string>& request, WorkerEnv& env, unsigned threads) {
  std::vector<FactOutcome> out(ideas.size());
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(ideas.size())));
  if (threads <= 1) {
    for (std::size_t i = 0; i < ideas.size(); ++i) out[i] = build_fact(ideas[i], ctx, request, env);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(ideas.size());
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < ideas.size();) {
        try {
          out[i] = build_fact(ideas[i], ctx, request, env);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::string introduction_text(const ingest::Dataset& ds, const std::optional<std::string>& request) {
  std::vector<std::string> names;
  for (const auto& c : ds.columns) names.push_back(c.name);
  std::string list;
  if (names.size() <= 1) {
    list = names.empty() ? "" : names[0];
  } else {
    std::vector<std::string> head(names.begin(), names.end() - 1);
    list = text::join(head, ", ") + " and " + names.back();
  }
  std::string out = fmt::format("The {} dataset has {} {} and {} {}: {}.", ds.name, ds.row_count,
                                ds.row_count == 1 ? "row" : "rows", ds.columns.size(),
                                ds.columns.size() == 1 ? "column" : "columns", list);
  if (request && !text::trim(*request).empty()) out += fmt::format(" Requested focus: \"{}\".", text::trim(*request));
  return out;
}

std::vector<std::string> partition_problems(const json& output, const std::vector<std::string>& fact_ids) {
  std::vector<std::string> problems;
  const auto& sections = output.at("sections");
  const std::size_t lo = std::min(kMinSections, fact_ids.size());
  const std::size_t hi = std::min(kMaxSections, std::max<std::size_t>(fact_ids.size(), 1));
  if (sections.size() < lo || sections.size() > hi)
    problems.push_back(fmt::format("{} sections given, expected {} to {}", sections.size(), lo, hi));
  std::set<std::string> known(fact_ids.begin(), fact_ids.end());
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (text::trim(sections[i].value("topic", "")).empty())
      problems.push_back(fmt::format("sections[{}].topic is empty", i));
    if (sections[i]["fact_ids"].empty()) problems.push_back(fmt::format("sections[{}] has no facts", i));
    for (const auto& id : sections[i]["fact_ids"]) {
      std::string s = id.get<std::string>();
      if (!known.count(s)) problems.push_back(fmt::format("unknown fact id \"{}\"", s));
      else if (++seen[s] == 2) problems.push_back(fmt::format("fact id \"{}\" appears more than once", s));
    }
  }
  for (const auto& id : fact_ids)
    if (!seen.count(id)) problems.push_back(fmt::format("fact id \"{}\" is missing", id));
  return problems;
}

SheetStructure organize_sheet(const std::vector<FactCard>& facts, const ingest::Dataset& ds,
                              const std::optional<std::string>& request, WorkerEnv& env) {
  if (facts.empty()) throw Error(ErrorKind::validation, "cannot organize a sheet without facts");
  std::vector<std::string> ids;
  json items = json::array();
  for (const auto& f : facts) {
    ids.push_back(f.idea.id);
    items.push_back({{"id", f.idea.id},
                     {"fact_type", std::string(to_string(f.idea.fact_type))},
                     {"content", f.idea.content},
                     {"statement", f.statement}});
  }
  std::vector<std::string> cols;
  for (const auto& c : ds.columns)
    cols.push_back(fmt::format("{} ({})", c.name, c.data_class ? ingest::to_string(*c.data_class) : "unclassified"));
  json payload{{"dataset", fmt::format("{}: {} rows, columns {}", ds.name, ds.row_count, text::join(cols, ", "))},
               {"facts", items}};
  add_request(payload, request);

  SheetStructure s;
  s.introduction = introduction_text(ds, request);
  s.sections.push_back({std::string(kIntroductionId), std::string(kIntroductionTopic), {}});
  agent::InvokeOptions opt;
  opt.max_repairs = 1;
  opt.check = [&ids](const json& out) { return partition_problems(out, ids); };
  try {
    auto r = call(env, "writer", agent::builtin_profile("organizer"), std::move(payload), opt);
    s.title = text::trim(r.output["title"].get<std::string>());
    std::size_t n = 0;
    for (const auto& sec : r.output["sections"])
      s.sections.push_back({fmt::format("s{}", ++n), text::trim(sec["topic"].get<std::string>()),
                            sec["fact_ids"].get<std::vector<std::string>>()});
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::worker) throw;
    s.sections.push_back({"s1", std::string(kFallbackTopic), ids});
  }
  if (s.title.empty()) s.title = fmt::format("{} at a glance", ds.name);
  return s;
}

std::string place_fact(const SheetStructure& structure, const std::map<std::string, FactCard>& facts,
                       const FactCard& card, WorkerEnv& env) {
  std::vector<std::string> candidates;
  json sections = json::array();
  for (const auto& sec : structure.sections) {
    if (sec.id == kIntroductionId) continue;
    candidates.push_back(sec.id);
    json contents = json::array();
    for (const auto& id : sec.fact_ids)
      if (auto it = facts.find(id); it != facts.end()) contents.push_back(it->second.idea.content);
    sections.push_back({{"id", sec.id}, {"topic", sec.topic}, {"facts", contents}});
  }
  if (candidates.empty()) throw Error(ErrorKind::validation, "the sheet has no section to hold a new fact");
  json payload{{"sections", sections},
               {"fact",
                {{"fact_type", std::string(to_string(card.idea.fact_type))},
                 {"content", card.idea.content},
                 {"statement", card.statement}}}};
  agent::InvokeOptions opt;
  opt.max_repairs = 0;
  opt.check = [&candidates](const json& out) {
    auto id = out["section_id"].get<std::string>();
    if (std::find(candidates.begin(), candidates.end(), id) == candidates.end())
      return std::vector<std::string>{fmt::format("unknown section id \"{}\"", id)};
    return std::vector<std::string>{};
  };
  try {
    return call(env, "editor", agent::builtin_profile("placer"), std::move(payload), opt).output["section_id"];
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::worker) throw;
    return candidates.back();
  }
}

}  // namespace factflow::workers
