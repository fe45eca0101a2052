#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include "CLI11.hpp"
#include "factflow/anonymizer.hpp"
#include "factflow/representation.hpp"
#include "factflow/server.hpp"
#include "factflow/service.hpp"

namespace fs = std::filesystem;
using namespace factflow;
using nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 7;
  fs::path workspace = "factflow-workspace";
  std::string transport = "replay";
  fs::path fixtures = "fixtures/replay";
  std::size_t budget = repr::kDefaultBudget;
  unsigned threads = 4;
};

service::Options options_of(const Globals& g) {
  service::Options o;
  o.workspace = g.workspace;
  o.budget = g.budget;
  o.default_seed = g.seed;
  o.threads = g.threads;
  return o;
}

void write_out(const std::string& path, const std::string& bytes) {
  if (path.empty() || path == "-") {
    std::cout << bytes;
    return;
  }
  service::write_file_atomic(path, bytes);
}

ingest::Dataset read_csv(const fs::path& path) {
  return ingest::classify_columns(ingest::load_csv(service::read_file(path), path.stem().string()));
}

// A CSV path is uploaded first; anything else is taken as a dataset id.
std::string dataset_ref(service::SheetService& svc, const std::string& arg) {
  if (fs::is_regular_file(arg)) return svc.add_dataset(service::read_file(arg), fs::path(arg).stem().string()).id;
  return arg;
}

json summary(const sheet::FactSheet& s) {
  json sections = json::array();
  for (const auto& sec : s.structure.sections)
    sections.push_back({{"id", sec.id}, {"topic", sec.topic}, {"facts", sec.fact_ids}});
  return {{"sheet_id", s.id}, {"revision", s.revision}, {"title", s.structure.title}, {"sections", sections}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"factflow: fact sheets from tabular data"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "seed for anonymization and sampling")->capture_default_str();
  app.add_option("--workspace", g.workspace, "directory holding datasets, sheets and blocks")->capture_default_str();
  app.add_option("--transport", g.transport, "live | record | replay")
      ->check(CLI::IsMember({"live", "record", "replay"}))
      ->capture_default_str();
  app.add_option("--fixtures", g.fixtures, "fixture directory for record and replay")->capture_default_str();
  app.add_option("--budget", g.budget, "token budget of the dataset representation")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads per generation run")->capture_default_str();

  std::string csv, out, name, request, sheet_id, format = "svg", ops, host = "127.0.0.1", map_out;
  std::optional<std::int64_t> revision;
  int port = 8080;

  auto* ingest_cmd = app.add_subcommand("ingest", "upload a CSV into the workspace and print its schema");
  ingest_cmd->add_option("csv", csv)->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--name", name, "dataset name (default: file stem)");

  auto* repr_cmd = app.add_subcommand("represent", "print the prompt representation of a CSV");
  repr_cmd->add_option("csv", csv)->required()->check(CLI::ExistingFile);
  repr_cmd->add_option("-o,--out", out, "output file");

  auto* anon_cmd = app.add_subcommand("anonymize", "print the CSV with every cell anonymized");
  anon_cmd->add_option("csv", csv)->required()->check(CLI::ExistingFile);
  anon_cmd->add_option("-o,--out", out, "output file");
  anon_cmd->add_option("--map", map_out, "also write the anonymization map as JSON");

  auto* gen_cmd = app.add_subcommand("generate", "generate a fact sheet");
  gen_cmd->add_option("dataset", csv, "CSV path or dataset id")->required();
  gen_cmd->add_option("-r,--request", request, "what the reader wants to know");

  auto* edit_cmd = app.add_subcommand("edit", "apply edit ops to a sheet");
  edit_cmd->add_option("sheet", sheet_id)->required();
  edit_cmd->add_option("--ops", ops, "JSON array of ops, or @file")->required();
  edit_cmd->add_option("--revision", revision, "expected revision (default: current)");

  auto* add_cmd = app.add_subcommand("add-fact", "add a fact described in plain language");
  add_cmd->add_option("sheet", sheet_id)->required();
  add_cmd->add_option("request", request)->required();

  auto* export_cmd = app.add_subcommand("export", "export a sheet as SVG or PDF");
  export_cmd->add_option("sheet", sheet_id)->required();
  export_cmd->add_option("-f,--format", format)->check(CLI::IsMember({"svg", "pdf"}))->capture_default_str();
  export_cmd->add_option("-o,--out", out, "output file (default: stdout)");

  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP API");
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*repr_cmd) {
      auto ds = read_csv(csv);
      auto map = anon::build_map(ds, g.seed);
      write_out(out, repr::build_representation(ds, map, g.budget, g.seed).text() + "\n");
      return 0;
    }
    if (*anon_cmd) {
      auto ds = read_csv(csv);
      auto map = anon::build_map(ds, g.seed);
      std::vector<std::size_t> rows(ds.row_count);
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      anon::Row header;
      for (const auto& c : ds.columns) header.push_back(c.name);
      std::string body = repr::csv_line(header) + "\n";
      for (const auto& r : anon::anonymize_rows(ds, map, rows)) body += repr::csv_line(r) + "\n";
      write_out(out, body);
      if (!map_out.empty()) service::write_file_atomic(map_out, anon::to_json(map).dump(2) + "\n");
      return 0;
    }

    auto transport = service::make_transport(g.transport, g.fixtures);
    service::SheetService svc(options_of(g), *transport);

    if (*ingest_cmd) {
      auto rec = svc.add_dataset(service::read_file(csv), name.empty() ? fs::path(csv).stem().string() : name);
      std::cout << json{{"dataset_id", rec.id}, {"name", rec.name}, {"schema", rec.schema}}.dump(2) << "\n";
    } else if (*gen_cmd) {
      auto ds = dataset_ref(svc, csv);
      std::optional<std::string> req;
      if (!request.empty()) req = request;
      auto s = svc.generate(ds, req, g.seed, {}, [](std::string_view st) { std::cerr << "stage: " << st << "\n"; });
      std::cout << summary(s).dump(2) << "\n";
    } else if (*edit_cmd) {
      std::string text = ops;
      if (!text.empty() && text[0] == '@') text = service::read_file(text.substr(1));
      auto j = json::parse(text, nullptr, false);
      if (j.is_discarded() || !j.is_array()) throw Error(ErrorKind::validation, "--ops must be a JSON array");
      std::vector<sheet::EditOp> list;
      for (const auto& o : j) list.push_back(sheet::edit_from_json(o));
      auto rev = revision ? *revision : svc.load(sheet_id).revision;
      std::cout << summary(svc.edit(sheet_id, rev, list)).dump(2) << "\n";
    } else if (*add_cmd) {
      std::cout << summary(svc.add_fact(sheet_id, request)).dump(2) << "\n";
    } else if (*export_cmd) {
      write_out(out, svc.export_sheet(sheet_id, format));
    } else if (*serve_cmd) {
      server::HttpServer http(svc);
      std::cerr << fmt::format("listening on http://{}:{}\n", host, port);
      if (!http.listen(host, port)) throw Error(ErrorKind::io, fmt::format("cannot listen on {}:{}", host, port));
    }
  } catch (const ingest::CsvError& e) {
    std::cerr << fmt::format("error (csv_parse): {} at row {}, column {}\n", e.what(), e.row(), e.column());
    return 2;
  } catch (const Error& e) {
    std::cerr << fmt::format("error ({}): {}\n", to_string(e.kind()), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
