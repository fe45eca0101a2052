#include <chrono>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "factflow/server.hpp"
#include "factflow/service.hpp"
#include "fake_llm.hpp"
#include "httplib.h"
#include "test_util.hpp"

using namespace factflow;
using namespace factflow::service;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string carsales_csv() { return read_file(testutil::source_dir() / "data" / "carsales.csv"); }

struct Env {
  explicit Env(const std::string& name) : dir(testutil::temp_dir(name)), transport([](const std::string& p) { return fake::respond(p); }) {
    Options o;
    o.workspace = dir;
    svc = std::make_unique<SheetService>(o, transport);
  }
  fs::path dir;
  agent::ScriptedTransport transport;
  std::unique_ptr<SheetService> svc;
};

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io;
}

}  // namespace

TEST_CASE("datasets are stored under a content id") {
  Env env("svc_datasets");
  auto a = env.svc->add_dataset(carsales_csv(), "carsales");
  auto b = env.svc->add_dataset(carsales_csv(), "carsales");
  CHECK(a.id == b.id);
  CHECK(a.id.rfind("ds-", 0) == 0);
  CHECK(a.schema.size() == 4);
  CHECK(fs::exists(env.dir / "datasets" / a.id / "data.csv"));
  CHECK(env.svc->dataset(a.id).name == "carsales");
  CHECK(env.svc->load_dataset(a.id).row_count == 275);
  CHECK(kind_of([&] { env.svc->dataset("ds-nope"); }) == ErrorKind::not_found);
  CHECK_THROWS_AS(env.svc->add_dataset("a,b\n1\n", "bad"), ingest::CsvError);
}

TEST_CASE("generated sheets persist and reload unchanged") {
  Env env("svc_generate");
  auto ds = env.svc->add_dataset(carsales_csv(), "carsales");
  std::vector<std::string> stages;
  auto s = env.svc->generate(ds.id, std::nullopt, 7, {}, [&](std::string_view st) { stages.emplace_back(st); });
  CHECK(stages.front() == "ingest");
  CHECK(stages.back() == "done");
  CHECK(env.svc->exists(s.id));
  CHECK(env.svc->load(s.id) == s);
  CHECK(sheet::sheet_problems(s).empty());
  CHECK(s.structure.sections.size() >= 3);
  CHECK(fs::exists(env.svc->run_dir(s.id) / "runlog.jsonl"));
  CHECK(fs::exists(env.svc->run_dir(s.id) / "envelopes.json"));
  for (const auto& [id, card] : s.facts) CHECK(fs::exists(env.dir / card.chart_block));
}

TEST_CASE("edits check the revision and apply all or nothing") {
  Env env("svc_edit");
  auto ds = env.svc->add_dataset(carsales_csv(), "carsales");
  auto s = env.svc->generate(ds.id, std::nullopt, 7);
  auto last = s.structure.sections.back().id;

  sheet::EditOp rename;
  rename.kind = sheet::EditKind::rename_section;
  rename.section_id = last;
  rename.topic = "Renamed";
  auto s1 = env.svc->edit(s.id, 0, {rename});
  CHECK(s1.revision == 1);
  CHECK(env.svc->load(s.id).structure.sections.back().topic == "Renamed");

  CHECK(kind_of([&] { env.svc->edit(s.id, 0, {rename}); }) == ErrorKind::conflict);

  sheet::EditOp bad;
  bad.kind = sheet::EditKind::delete_fact;
  bad.fact_id = "f999";
  rename.topic = "Never saved";
  CHECK(kind_of([&] { env.svc->edit(s.id, 1, {rename, bad}); }) == ErrorKind::validation);
  auto now = env.svc->load(s.id);
  CHECK(now.revision == 1);
  CHECK(now.structure.sections.back().topic == "Renamed");

  CHECK(kind_of([&] { env.svc->edit("00000000-0000-4000-8000-00000000beef", 0, {rename}); }) ==
        ErrorKind::not_found);
  CHECK(kind_of([&] { env.svc->load("../etc/passwd"); }) == ErrorKind::not_found);
}

TEST_CASE("facts added in plain language") {
  Env env("svc_add");
  auto ds = env.svc->add_dataset(carsales_csv(), "carsales");
  auto s = env.svc->generate(ds.id, std::nullopt, 7);
  auto before = s.facts.size();

  auto s2 = env.svc->add_fact(s.id, "The proportion of sales by type from Ford Brand");
  CHECK(s2.facts.size() == before + 1);
  CHECK(s2.revision == s.revision + 1);
  auto id = "f" + std::to_string(s2.fact_counter);
  REQUIRE(s2.facts.count(id) == 1);
  CHECK(s2.facts.at(id).chart.chart_type == ChartType::pie);
  CHECK(s2.facts.at(id).sql.find("'Ford'") != std::string::npos);
  CHECK(sheet::sheet_problems(s2).empty());

  CHECK(kind_of([&] { env.svc->add_fact(s.id, "   "); }) == ErrorKind::validation);
  CHECK(kind_of([&] { env.svc->add_fact(s.id, "Predict next year's sales"); }) == ErrorKind::unsupported);
  CHECK(env.svc->load(s.id).revision == s2.revision);
}

TEST_CASE("exports") {
  Env env("svc_export");
  auto ds = env.svc->add_dataset(carsales_csv(), "carsales");
  auto s = env.svc->generate(ds.id, std::nullopt, 7);
  CHECK(env.svc->export_sheet(s.id, "svg").rfind("<svg", 0) == 0);
  CHECK(env.svc->export_sheet(s.id, "pdf").rfind("%PDF-1.", 0) == 0);
  CHECK(kind_of([&] { env.svc->export_sheet(s.id, "png"); }) == ErrorKind::validation);
}

TEST_CASE("replay without a recording names the missing digest") {
  auto dir = testutil::temp_dir("svc_replay_missing");
  fs::create_directories(dir / "fixtures");
  agent::ReplayTransport replay(dir / "fixtures");
  Options o;
  o.workspace = dir / "ws";
  SheetService svc(o, replay);
  auto ds = svc.add_dataset(carsales_csv(), "carsales");
  try {
    svc.generate(ds.id, std::nullopt, 7);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::fixture_missing);
    std::string msg = std::string(e.what()) + e.detail();
    bool has_digest = false;
    for (std::size_t i = 0; i + 64 <= msg.size() && !has_digest; ++i)
      has_digest = msg.find_first_not_of("0123456789abcdef", i) >= i + 64;
    CHECK(has_digest);
  }
}

TEST_CASE("forecasting requests fail before any model call") {
  Env env("svc_forecast");
  auto ds = env.svc->add_dataset(carsales_csv(), "carsales");
  CHECK(kind_of([&] { env.svc->generate(ds.id, std::string("Forecast sales for 2030"), 7); }) ==
        ErrorKind::unsupported);
  CHECK(env.transport.prompts().empty());
}

TEST_CASE("error kinds map to HTTP statuses") {
  CHECK(server::http_status(ErrorKind::validation) == 400);
  CHECK(server::http_status(ErrorKind::csv_parse) == 400);
  CHECK(server::http_status(ErrorKind::not_found) == 404);
  CHECK(server::http_status(ErrorKind::conflict) == 409);
  CHECK(server::http_status(ErrorKind::unsupported) == 422);
  CHECK(server::http_status(ErrorKind::fixture_missing) == 502);
  CHECK(server::http_status(ErrorKind::io) == 500);
}

TEST_CASE("HTTP API") {
  Env env("svc_http");
  server::HttpServer http(*env.svc);
  int port = http.bind_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread loop([&] { http.serve(); });
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(30, 0);

  auto health = cli.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);

  auto bad_csv = cli.Post("/datasets?name=bad", "a,b\n\"x\n", "text/csv");
  REQUIRE(bad_csv);
  CHECK(bad_csv->status == 400);
  CHECK(json::parse(bad_csv->body)["error"] == "csv_parse");

  httplib::MultipartFormDataItems items = {{"file", carsales_csv(), "carsales.csv", "text/csv"}};
  auto up = cli.Post("/datasets", items);
  REQUIRE(up);
  CHECK(up->status == 201);
  auto ds_id = json::parse(up->body)["dataset_id"].get<std::string>();

  auto missing_ds = cli.Post("/sheets", json{{"dataset_id", "ds-0000"}}.dump(), "application/json");
  REQUIRE(missing_ds);
  CHECK(missing_ds->status == 404);

  auto forecast = cli.Post("/sheets", json{{"dataset_id", ds_id}, {"request", "Predict future sales"}}.dump(),
                           "application/json");
  REQUIRE(forecast);
  CHECK(forecast->status == 422);

  auto created = cli.Post("/sheets", json{{"dataset_id", ds_id}, {"seed", 7}}.dump(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 202);
  auto sheet_id = json::parse(created->body)["sheet_id"].get<std::string>();

  json status;
  for (int i = 0; i < 600; ++i) {
    auto r = cli.Get("/sheets/" + sheet_id + "/status");
    REQUIRE(r);
    CHECK(r->status == 200);
    status = json::parse(r->body);
    if (status["done"].get<bool>()) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  CHECK(status["stage"] == "done");

  auto got = cli.Get("/sheets/" + sheet_id);
  REQUIRE(got);
  CHECK(got->status == 200);
  auto sheet = json::parse(got->body);
  CHECK(sheet["revision"] == 0);

  json patch{{"revision", 0},
             {"ops", {{{"op", "edit_text"}, {"field", "title"}, {"text", "Edited over HTTP"}}}}};
  auto patched = cli.Patch("/sheets/" + sheet_id, patch.dump(), "application/json");
  REQUIRE(patched);
  CHECK(patched->status == 200);
  CHECK(json::parse(patched->body)["revision"] == 1);

  auto stale = cli.Patch("/sheets/" + sheet_id, patch.dump(), "application/json");
  REQUIRE(stale);
  CHECK(stale->status == 409);
  CHECK(json::parse(stale->body)["error"] == "conflict");

  json bad_op{{"revision", 1}, {"ops", {{{"op", "explode"}}}}};
  auto rejected = cli.Patch("/sheets/" + sheet_id, bad_op.dump(), "application/json");
  REQUIRE(rejected);
  CHECK(rejected->status == 400);

  auto added = cli.Post("/sheets/" + sheet_id + "/facts",
                        json{{"request", "The proportion of sales by type from Ford Brand"}}.dump(), "application/json");
  REQUIRE(added);
  CHECK(added->status == 200);
  CHECK(json::parse(added->body)["revision"] == 2);

  auto svg = cli.Get("/sheets/" + sheet_id + "/export?format=svg");
  REQUIRE(svg);
  CHECK(svg->status == 200);
  CHECK(svg->get_header_value("Content-Type").find("image/svg+xml") == 0);
  CHECK(svg->body.find("Edited over HTTP") != std::string::npos);

  auto pdf = cli.Get("/sheets/" + sheet_id + "/export?format=pdf");
  REQUIRE(pdf);
  CHECK(pdf->status == 200);
  CHECK(pdf->get_header_value("Content-Type") == "application/pdf");
  CHECK(pdf->body.rfind("%PDF-1.", 0) == 0);

  auto png = cli.Get("/sheets/" + sheet_id + "/export?format=png");
  REQUIRE(png);
  CHECK(png->status == 400);

  auto unknown = cli.Get("/sheets/00000000-0000-4000-8000-00000000beef");
  REQUIRE(unknown);
  CHECK(unknown->status == 404);
  auto unknown_status = cli.Get("/sheets/00000000-0000-4000-8000-00000000beef/status");
  REQUIRE(unknown_status);
  CHECK(unknown_status->status == 404);

  http.stop();
  loop.join();
}
