#include <fmt/format.h>

#include <algorithm>

#include "doctest.h"
#include "factflow/anonymizer.hpp"
#include "factflow/representation.hpp"
#include "factflow/workers.hpp"
#include "fake_llm.hpp"
#include "test_util.hpp"

using namespace factflow;
using namespace factflow::workers;
using factflow::testutil::cell;
using nlohmann::json;

namespace {

std::string worker_of(const std::string& prompt) {
  auto head = prompt.substr(0, prompt.find('\n'));
  return head.substr(2, head.size() - 9);
}

std::string reply(const json& j) { return "```json\n" + j.dump() + "\n```"; }

FactIdea idea(FactType t, std::string content, double s) { return {"", t, std::move(content), s}; }

struct Fixture {
  ingest::Dataset ds = testutil::sample("carsales");
  anon::AnonymizationMap map = anon::build_map(ds, 7);
  repr::DatasetRepresentation rep = repr::build_representation(ds, map, repr::kDefaultBudget, 7);
  DatasetContext ctx{ds, map, rep};
};

}  // namespace

TEST_CASE("merge keeps ideas seen in a majority of samples") {
  auto a = idea(FactType::trend, "Total Sale per Year.", 0.9);
  auto b = idea(FactType::rank, "Top 5 Brand by total Sale.", 0.8);
  auto c = idea(FactType::outlier, "Brand whose Sale exceeds the 75th percentile.", 0.99);

  SUBCASE("k=3: samples {1,2} kept, sample 3 only dropped") {
    auto merged = merge_samples({{a, b}, {b, a}, {c}}, 12);
    REQUIRE(merged.size() == 2);
    CHECK(merged[0].content == a.content);
    CHECK(merged[1].content == b.content);
    CHECK(merged[0].id == "f1");
    CHECK(merged[1].id == "f2");
  }
  SUBCASE("k=1 keeps everything, ranked and truncated") {
    auto merged = merge_samples({{b, c, a}}, 2);
    REQUIRE(merged.size() == 2);
    CHECK(merged[0].content == c.content);
    CHECK(merged[1].content == a.content);
  }
  SUBCASE("significance is the mean over the samples that carry the idea") {
    auto a2 = a;
    a2.significance = 0.5;
    auto merged = merge_samples({{a}, {a2}, {}}, 12);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].significance == doctest::Approx(0.7));
  }
  SUBCASE("repeats inside one sample count once") {
    CHECK(merge_samples({{c, c}, {}, {}}, 12).empty());
  }
  SUBCASE("ties keep first appearance") {
    auto x = idea(FactType::value, "x first", 0.5);
    auto y = idea(FactType::value, "y second", 0.5);
    auto merged = merge_samples({{x, y}, {y, x}}, 12);
    REQUIRE(merged.size() == 2);
    CHECK(merged[0].content == "x first");
  }
}

TEST_CASE("fact signatures ignore case, punctuation and word order") {
  CHECK(fact_signature(FactType::rank, "Top 5 Brand by total Sale.") ==
        fact_signature(FactType::rank, "top 5 brand, by TOTAL sale"));
  CHECK(fact_signature(FactType::rank, "Sale by Brand") == fact_signature(FactType::rank, "Brand by Sale"));
  CHECK(fact_signature(FactType::rank, "Sale by Brand") != fact_signature(FactType::trend, "Sale by Brand"));
}

TEST_CASE("forecasting requests are outside the pipeline") {
  CHECK(is_forecasting_request("Predict the future trends of movie revenue"));
  CHECK(is_forecasting_request("What will be the sales next year?"));
  CHECK_FALSE(is_forecasting_request("Show me the top 5 dramas with the highest revenue this century"));
  CHECK_FALSE(is_forecasting_request("The proportion of movies by type from Fox Studio"));
  try {
    reject_forecasting("Forecast sales for 2030");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unsupported);
  }
}

TEST_CASE("composer samples are merged by majority") {
  Fixture f;
  agent::ScriptedTransport t([](const std::string& p) { return fake::respond(p); });
  WorkerEnv env{t};
  auto ideas = compose_fact_ideas(f.rep, std::nullopt, env);
  std::vector<std::string> contents;
  for (const auto& i : ideas) contents.push_back(i.content);
  CHECK(t.prompts().size() == 3);
  // Present in samples 1 and 3 only.
  CHECK(std::count(contents.begin(), contents.end(), "Number of records per Brand.") == 1);
  // Present in one sample only.
  CHECK(std::count(contents.begin(), contents.end(), "Difference in total Sale between the top two Brand.") == 0);
  CHECK(std::count(contents.begin(), contents.end(), "Brand whose Sale exceeds the 75th percentile.") == 0);
  for (std::size_t i = 1; i < ideas.size(); ++i) CHECK(ideas[i - 1].significance >= ideas[i].significance);

  agent::ScriptedTransport empty([](const std::string&) { return reply({{"facts", json::array()}}); });
  WorkerEnv env2{empty};
  try {
    compose_fact_ideas(f.rep, std::nullopt, env2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::generation);
    CHECK(std::string(e.what()).find("broader") != std::string::npos);
  }
}

TEST_CASE("extraction stops after three generation attempts") {
  Fixture f;
  auto bad = idea(FactType::aggregation, "Average Sale by Brand.", 0.7);
  bad.id = "f1";
  int extractor_calls = 0;
  agent::ScriptedTransport t([&](const std::string& p) {
    auto w = worker_of(p);
    if (w == "extractor_advisor") return reply({{"recommendations", {"Quote identifiers."}}});
    ++extractor_calls;
    return reply({{"sql", "SELECT Brand, AVG(Salez) FROM carsales GROUP BY Brand"}});
  });
  agent::RunLog log;
  WorkerEnv env{t, &log};
  try {
    extract_data(bad, f.ctx, std::nullopt, env);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::extraction);
    CHECK(e.detail().find("Salez") != std::string::npos);
  }
  CHECK(extractor_calls == kMaxSqlAttempts);
  // The third prompt carries both earlier failures.
  auto prompts = t.prompts();
  CHECK(prompts.back().find("\"previous\"") != std::string::npos);
  CHECK(prompts.back().find("Salez") != std::string::npos);
}

TEST_CASE("extraction repairs a broken first attempt") {
  Fixture f;
  auto avg = idea(FactType::aggregation, "Average Sale by Brand.", 0.7);
  avg.id = "f1";
  agent::ScriptedTransport t([](const std::string& p) { return fake::respond(p); });
  agent::RunLog log;
  EnvelopeTrail trail;
  WorkerEnv env{t, &log, &trail};
  auto ex = extract_data(avg, f.ctx, std::nullopt, env);
  CHECK(ex.attempts == 2);
  CHECK(ex.table.row_count() == 11);
  CHECK(ex.sql.find("\"Sale\"") != std::string::npos);
  int sql_attempts = 0;
  for (const auto& e : log.entries())
    if (e["worker"] == "extractor") sql_attempts = std::max(sql_attempts, e["sql_attempt"].get<int>());
  CHECK(sql_attempts == 2);

  auto env_list = trail.envelopes();
  REQUIRE(env_list.size() == 3);
  CHECK(env_list[0].sender == "composer");
  CHECK(env_list[0].recipient == "extractor_advisor");
  CHECK(env_list[1].sender == "extractor_advisor");
  CHECK(env_list[1].recipient == "extractor");
}

TEST_CASE("empty results count as failed attempts") {
  Fixture f;
  auto i = idea(FactType::value, "Sales of nothing.", 0.5);
  int n = 0;
  agent::ScriptedTransport t([&](const std::string& p) {
    if (worker_of(p) == "extractor_advisor") return reply({{"recommendations", json::array()}});
    ++n;
    return reply({{"sql", n < 3 ? "SELECT Brand FROM carsales WHERE Sale < 0" : "SELECT Brand, Sale FROM carsales"}});
  });
  WorkerEnv env{t};
  auto ex = extract_data(i, f.ctx, std::nullopt, env);
  CHECK(ex.attempts == 3);
  CHECK(t.prompts().back().find("no rows") != std::string::npos);
}

TEST_CASE("fallback chart follows the column kinds") {
  using sql::SqlType;
  auto i = idea(FactType::trend, "Sale per Year.", 0.5);
  auto year_sale = testutil::table({{"Year", SqlType::integer}, {"Sale", SqlType::integer}},
                                   {{cell(2007), cell(10)}, {cell(2008), cell(12)}});
  auto p = fallback_chart(i, year_sale);
  CHECK(p.chart_type == ChartType::line);
  CHECK(p.x_field == "Year");
  CHECK(p.y_field == "Sale");
  CHECK(p.title == "Sale per Year");

  auto brand_sale = testutil::table({{"Brand", SqlType::text}, {"Sale", SqlType::integer}}, {{cell("A"), cell(1)}});
  CHECK(fallback_chart(i, brand_sale).chart_type == ChartType::bar);

  auto two_reals = testutil::table({{"a", SqlType::real}, {"b", SqlType::real}}, {{cell(1.5), cell(2.5)}});
  CHECK(fallback_chart(i, two_reals).chart_type == ChartType::scatter);

  auto texts = testutil::table({{"a", SqlType::text}, {"b", SqlType::text}}, {{cell("x"), cell("y")}});
  auto q = fallback_chart(i, texts);
  CHECK(q.chart_type == ChartType::bar);
  CHECK(q.x_field == "a");
  CHECK(q.y_field == "b");
}

TEST_CASE("chart proposals are validated, repaired once, then replaced") {
  using sql::SqlType;
  auto i = idea(FactType::trend, "Sale per Year.", 0.5);
  auto t = testutil::table({{"Year", SqlType::integer}, {"Sale", SqlType::integer}},
                           {{cell(2007), cell(10)}, {cell(2008), cell(12)}});
  json pie_two_numbers{{"chart_type", "pie"}, {"x_field", "Year"}, {"y_field", "Sale"}, {"x_label", "Year"},
                       {"y_label", "Sale"}, {"title", "t"}, {"color_scheme", "categorical"}};
  json four_dims = pie_two_numbers;
  four_dims["chart_type"] = "line";
  four_dims["color_field"] = "Year";
  four_dims["extra_fields"] = {"Sale"};

  agent::ScriptedTransport always_bad({reply(pie_two_numbers), reply(four_dims)});
  WorkerEnv env{always_bad};
  auto p = choose_chart(i, t, env);
  CHECK(always_bad.prompts().size() == 2);
  CHECK(always_bad.prompts()[1].find("too many encoded dimensions") == std::string::npos);
  CHECK(always_bad.prompts()[1].find("pie needs one categorical field") != std::string::npos);
  CHECK(p.chart_type == ChartType::line);  // fallback for (Year:int, Sale:int)
  CHECK(p.x_field == "Year");

  json good = pie_two_numbers;
  good["chart_type"] = "bar";
  agent::ScriptedTransport repaired({reply(four_dims), reply(good)});
  WorkerEnv env2{repaired};
  CHECK(choose_chart(i, t, env2).chart_type == ChartType::bar);
  CHECK(repaired.prompts()[1].find("too many encoded dimensions") != std::string::npos);

  auto one_col = testutil::table({{"Sale", SqlType::integer}}, {{cell(1)}});
  try {
    choose_chart(i, one_col, env2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
  }
}

TEST_CASE("statements must be grounded in the table") {
  using sql::SqlType;
  auto single = testutil::table({{"n", SqlType::integer}}, {{cell(42)}});
  CHECK(ungrounded_numbers("The total is 42.", single).empty());
  CHECK(ungrounded_numbers("The total is 41.", single) == std::vector<std::string>{"41"});
  CHECK(ungrounded_numbers("There is 1 row.", single).empty());

  auto t = testutil::table({{"Brand", SqlType::text}, {"Sale", SqlType::real}},
                           {{cell("Model 3"), cell(1234.56)}, {cell("B"), cell(765.44)}});
  CHECK(ungrounded_numbers("Model 3 sold 1,234.6 units.", t).empty());
  CHECK(ungrounded_numbers("Model 3 sold 1235 units.", t).empty());
  CHECK(ungrounded_numbers("That is 61.7% of all sales.", t).empty());
  auto off = ungrounded_numbers("That is 62.5% of all sales.", t);
  REQUIRE(off.size() == 1);
  CHECK(off[0].rfind("62.5", 0) == 0);
  CHECK(ungrounded_numbers("It ranks 1st of the 2 brands.", t).empty());
  CHECK(ungrounded_numbers("About 1.2 thousand units.", t).empty());
  CHECK(ungrounded_numbers("Sales fell by -3.", t) == std::vector<std::string>{"-3"});
}

TEST_CASE("writer replies are checked and fall back to a template") {
  using sql::SqlType;
  auto i = idea(FactType::extreme, "Brand with the top sale.", 0.5);
  auto t = testutil::table({{"Brand", SqlType::text}, {"Sale", SqlType::integer}},
                           {{cell("France"), cell(89)}, {cell("Spain"), cell(83)}});
  ChartParams chart;
  chart.x_field = chart.x_label = "Brand";
  chart.y_field = chart.y_label = "Sale";

  json ok{{"statement", "France leads with 89, ahead of Spain at 83."},
          {"causal_qas", {{{"question", "Why is France the most visited country for tourism?"},
                           {"answer", "The table does not say."}}}}};
  agent::ScriptedTransport good({reply(ok)});
  WorkerEnv env{good};
  auto w = write_fact(i, t, chart, env);
  CHECK_FALSE(w.templated);
  CHECK(w.causal_qas.size() == 1);

  json no_qas{{"statement", "France leads with 89."}, {"causal_qas", json::array()}};
  agent::ScriptedTransport quiet({reply(no_qas)});
  WorkerEnv env_q{quiet};
  CHECK(write_fact(i, t, chart, env_q).causal_qas.empty());

  json made_up{{"statement", "France leads with 90."}};
  made_up["causal_qas"] = {{{"question", "Why"}, {"answer", "x"}}};
  agent::ScriptedTransport bad({reply(made_up), reply(made_up)});
  WorkerEnv env2{bad};
  auto w2 = write_fact(i, t, chart, env2);
  CHECK(bad.prompts().size() == 2);
  CHECK(bad.prompts()[1].find("statement number 90") != std::string::npos);
  CHECK(bad.prompts()[1].find("must end with \"?\"") != std::string::npos);
  CHECK(w2.templated);
  CHECK(w2.statement == "Sale by Brand");
  CHECK(w2.causal_qas.empty());
}

TEST_CASE("organizer output must partition the facts") {
  std::vector<std::string> ids = {"f1", "f2", "f3"};
  auto groups = [](json sections) { return json{{"title", "t"}, {"sections", std::move(sections)}}; };
  CHECK(partition_problems(groups({{{"topic", "A"}, {"fact_ids", {"f1", "f2"}}}, {{"topic", "B"}, {"fact_ids", {"f3"}}}}),
                           ids)
            .empty());
  CHECK_FALSE(partition_problems(groups({{{"topic", "A"}, {"fact_ids", {"f1", "f2", "f3"}}}}), ids).empty());
  CHECK_FALSE(
      partition_problems(groups({{{"topic", "A"}, {"fact_ids", {"f1", "f2"}}}, {{"topic", "B"}, {"fact_ids", {"f2"}}}}),
                         ids)
          .empty());
  CHECK_FALSE(
      partition_problems(groups({{{"topic", "A"}, {"fact_ids", {"f1", "f9"}}}, {{"topic", "B"}, {"fact_ids", {"f3"}}}}),
                         ids)
          .empty());
  CHECK_FALSE(partition_problems(groups({{{"topic", " "}, {"fact_ids", {"f1", "f2"}}}, {{"topic", "B"}, {"fact_ids", {"f3"}}}}),
                                 ids)
                  .empty());
  CHECK(partition_problems(groups({{{"topic", "A"}, {"fact_ids", {"f1"}}}}), {"f1"}).empty());
}

TEST_CASE("organizer falls back to a single Findings section") {
  auto ds = testutil::sample("carsales");
  std::vector<FactCard> cards(3);
  for (int i = 0; i < 3; ++i) {
    cards[i].idea = {fmt::format("f{}", i + 1), FactType::value, fmt::format("fact {}", i + 1), 0.5};
    cards[i].statement = "s";
  }
  json omits{{"title", "T"},
             {"sections", {{{"topic", "A"}, {"fact_ids", {"f1"}}}, {{"topic", "B"}, {"fact_ids", {"f2"}}}}}};
  agent::ScriptedTransport t({reply(omits), reply(omits)});
  WorkerEnv env{t};
  auto s = organize_sheet(cards, ds, std::nullopt, env);
  CHECK(t.prompts().size() == 2);
  REQUIRE(s.sections.size() == 2);
  CHECK(s.sections[0].id == kIntroductionId);
  CHECK(s.sections[1].topic == kFallbackTopic);
  CHECK(s.sections[1].fact_ids == std::vector<std::string>{"f1", "f2", "f3"});
  CHECK(s.introduction.find("275 rows and 4 columns") != std::string::npos);

  json one{{"title", "T"}, {"sections", {{{"topic", "Only"}, {"fact_ids", {"f1"}}}}}};
  agent::ScriptedTransport single({reply(one)});
  WorkerEnv env1{single};
  auto s1 = organize_sheet({cards[0]}, ds, std::string("focus"), env1);
  REQUIRE(s1.sections.size() == 2);
  CHECK(s1.sections[1].topic == "Only");
  CHECK(s1.introduction.find("Requested focus: \"focus\"") != std::string::npos);
}

TEST_CASE("placer answers outside the sheet go to the last section") {
  SheetStructure s;
  s.sections = {{std::string(kIntroductionId), "Introduction", {}}, {"s1", "A", {}}, {"s2", "B", {}}};
  FactCard card;
  card.idea = {"f9", FactType::proportion, "x", 0.5};
  agent::ScriptedTransport unknown({reply({{"section_id", "s7"}})});
  WorkerEnv env{unknown};
  CHECK(place_fact(s, {}, card, env) == "s2");
  agent::ScriptedTransport intro({reply({{"section_id", "intro"}})});
  WorkerEnv env2{intro};
  CHECK(place_fact(s, {}, card, env2) == "s2");
  agent::ScriptedTransport first({reply({{"section_id", "s1"}})});
  WorkerEnv env3{first};
  CHECK(place_fact(s, {}, card, env3) == "s1");
}

TEST_CASE("a failing fact does not stop the others") {
  Fixture f;
  std::vector<FactIdea> ideas = {idea(FactType::trend, "Total Sale per Year.", 0.9),
                                 idea(FactType::value, "Something unparseable.", 0.8)};
  ideas[0].id = "f1";
  ideas[1].id = "f2";
  agent::ScriptedTransport t([](const std::string& p) {
    if (worker_of(p) == "extractor" && p.find("unparseable") != std::string::npos)
      return reply({{"sql", "SELEC nonsense"}});
    return fake::respond(p);
  });
  WorkerEnv env{t};
  auto outcomes = build_facts(ideas, f.ctx, std::nullopt, env, 2);
  REQUIRE(outcomes.size() == 2);
  CHECK(outcomes[0].card.has_value());
  CHECK_FALSE(outcomes[1].card.has_value());
  CHECK(outcomes[1].error_kind == ErrorKind::extraction);
  CHECK(chart::validate_params(outcomes[0].card->chart, outcomes[0].card->table).empty());
}
