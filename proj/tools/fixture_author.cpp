// Records the replay fixtures used by the end-to-end tests: every prompt the
// scenarios below send is answered by the rule-based responder and stored
// under its request digest.
#include <fmt/format.h>

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "factflow/service.hpp"
#include "fake_llm.hpp"

namespace fs = std::filesystem;
using namespace factflow;

int main(int argc, char** argv) {
  CLI::App app{"Record replay fixtures from the rule-based responder"};
  fs::path root = FACTFLOW_SOURCE_DIR;
  fs::path fixtures = root / "fixtures" / "replay";
  fs::path data = root / "data";
  bool keep_prompts = false;
  app.add_option("--fixtures", fixtures, "output directory");
  app.add_option("--data", data, "directory with carsales.csv and movies.csv");
  app.add_flag("--keep-prompts", keep_prompts, "also write <digest>.prompt files");
  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(fixtures);
    for (const auto& e : fs::directory_iterator(fixtures))
      if (e.path().extension() == ".txt" || e.path().extension() == ".prompt") fs::remove(e.path());

    auto workspace = fs::temp_directory_path() / fmt::format("factflow-author-{}", ::getpid());
    fs::remove_all(workspace);
    agent::ScriptedTransport responder([](const std::string& prompt) { return fake::respond(prompt); });
    agent::RecordTransport record(responder, fixtures, keep_prompts);
    service::Options opt;
    opt.workspace = workspace;
    service::SheetService svc(opt, record);

    auto cars = svc.add_dataset(service::read_file(data / "carsales.csv"), "carsales");
    auto s1 = svc.generate(cars.id, std::nullopt, 7);
    fmt::print("carsales: {} sections, {} facts\n", s1.structure.sections.size(), s1.facts.size());
    s1 = svc.add_fact(s1.id, "The proportion of sales by type from Ford Brand");
    fmt::print("carsales + request: {} facts\n", s1.facts.size());

    auto movies = svc.add_dataset(service::read_file(data / "movies.csv"), "movies");
    auto s2 = svc.generate(movies.id, std::string("Show me the top 5 dramas with the highest revenue this century"), 7);
    fmt::print("movies: {} sections, {} facts\n", s2.structure.sections.size(), s2.facts.size());
    s2 = svc.add_fact(s2.id, "The proportion of movies by type from Fox Studio");
    fmt::print("movies + request: {} facts\n", s2.facts.size());

    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(fixtures)) n += e.path().extension() == ".txt";
    fmt::print("{} fixtures in {}\n", n, fixtures.string());
    fs::remove_all(workspace);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return 1;
  }
  return 0;
}
