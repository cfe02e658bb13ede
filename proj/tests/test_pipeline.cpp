#include <atomic>
#include <chrono>
#include <thread>

#include "doctest.h"
#include "helpers.hpp"

#include "httplib.h"
#include "json.hpp"

#include "dlva/analyze.hpp"
#include "dlva/dataset.hpp"
#include "dlva/error.hpp"
#include "dlva/rpc.hpp"
#include "dlva/train.hpp"

using namespace dlva;

TEST_CASE("ingest") {
  SUBCASE("empty input") { CHECK(ingest_lines({}).empty()); }
  SUBCASE("well-formed lines keep their order") {
    auto records = ingest_lines({
        R"({"address":"0x01","bytecode":"0x6080","labels":{"reentrancy-eth":1}})",
        R"({"address":"0x02","bytecode":"0x00"})",
        R"({"address":"0x03","bytecode":"","labels":{}})",
    });
    REQUIRE(records.size() == 3);
    CHECK(records[0].address == "0x01");
    CHECK(records[0].labels.at("reentrancy-eth") == 1);
    CHECK(records[1].address == "0x02");
    CHECK(records[2].bytecode.bytes.empty());
  }
  SUBCASE("odd-length bytecode names the line") {
    try {
      ingest_lines({R"({"address":"0x01","bytecode":"0x6080"})",
                    R"({"address":"0x02","bytecode":"0x608"})"});
      FAIL("expected MalformedRecord");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MalformedRecord);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("duplicate addresses rejected") {
    try {
      ingest_lines({R"({"address":"0x01","bytecode":"0x00"})",
                    R"({"address":"0x01","bytecode":"0x00"})"});
      FAIL("expected DuplicateAddress");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DuplicateAddress);
    }
  }
}

TEST_CASE("split_dataset") {
  auto make = [](size_t n) {
    std::vector<ContractRecord> v(n);
    for (size_t i = 0; i < n; ++i) v[i].address = "0x" + std::to_string(i);
    return v;
  };
  SUBCASE("n=10 -> 6/2/2") {
    DatasetSplit s = split_dataset(make(10));
    CHECK(s.train.size() == 6);
    CHECK(s.valid.size() == 2);
    CHECK(s.test.size() == 2);
  }
  SUBCASE("n=0 -> 0/0/0") {
    DatasetSplit s = split_dataset({});
    CHECK(s.train.empty());
    CHECK(s.valid.empty());
    CHECK(s.test.empty());
  }
  SUBCASE("n=7 -> 4/1/2") {
    DatasetSplit s = split_dataset(make(7));
    CHECK(s.train.size() == 4);
    CHECK(s.valid.size() == 1);
    CHECK(s.test.size() == 2);
  }
  SUBCASE("concatenation preserves the input order") {
    auto records = make(23);
    DatasetSplit s = split_dataset(records);
    std::vector<ContractRecord> cat;
    cat.insert(cat.end(), s.train.begin(), s.train.end());
    cat.insert(cat.end(), s.valid.begin(), s.valid.end());
    cat.insert(cat.end(), s.test.begin(), s.test.end());
    REQUIRE(cat.size() == records.size());
    for (size_t i = 0; i < records.size(); ++i) CHECK(cat[i].address == records[i].address);
  }
}

TEST_CASE("route_by_size") {
  auto listing_of = [](size_t instructions) {
    RawBytecode code;
    code.bytes.assign(instructions, 0x5a);  // GAS, one byte each
    return disassemble(code);
  };
  CHECK(route_by_size(listing_of(749)).size_class == SizeClass::Small);
  CHECK(route_by_size(listing_of(750)).size_class == SizeClass::Large);
  CHECK_FALSE(route_by_size(listing_of(750)).oversize_warning);
  CHECK(route_by_size(listing_of(10000)).size_class == SizeClass::Large);
  CHECK_FALSE(route_by_size(listing_of(10000)).oversize_warning);
  CHECK(route_by_size(listing_of(10001)).size_class == SizeClass::Large);
  CHECK(route_by_size(listing_of(10001)).oversize_warning);
}

namespace {

// one trained-lite model plus an index seeded with known embeddings
struct Rig {
  ModelSet models;
  IndexSet indices;
  std::vector<ContractRecord> records;
  std::string vuln = "call-sstore-motif";

  explicit Rig(size_t n_contracts = 24) {
    records = testutil::motif_dataset(n_contracts, 0x417, vuln, 6, 10);
    VulnerabilityModel model =
        VulnerabilityModel::random_init(vuln, SizeClass::Small, GridConfig::shipped(), 99);
    models.models.push_back(std::move(model));
  }
};

}  // namespace

TEST_CASE("analyze paths") {
  Rig rig;
  VulnerabilityModel& model = rig.models.models[0];

  SUBCASE("small contracts always take the classifier path") {
    AnalysisRow row = analyze(rig.records[0], rig.models, nullptr);
    REQUIRE(row.error.empty());
    REQUIRE(row.cells.size() == 1);
    CHECK(row.cells[0].provenance == Provenance::CC);
    CHECK(row.cells[0].probability.has_value());
    CHECK(row.size_class == SizeClass::Small);
  }
  SUBCASE("missing model for the routed class reports unsupported") {
    ContractRecord large;
    large.address = "0xbig";
    Rng rng(1);
    large.bytecode = testutil::synthetic_contract(rng, 120, false);
    REQUIRE(route_by_size(disassemble(large.bytecode)).size_class == SizeClass::Large);
    AnalysisRow row = analyze(large, rig.models, nullptr);
    REQUIRE(row.cells.size() == 1);
    CHECK(row.cells[0].provenance == Provenance::Unsupported);
  }
  SUBCASE("batch isolation: one bad contract never aborts the rest") {
    // an unloadable record: force an analysis error by a poisoned model set
    std::vector<ContractRecord> batch(rig.records.begin(), rig.records.begin() + 3);
    batch[1].bytecode.bytes.assign(2000000, 0x00);  // huge but valid; still analyzable
    auto rows = analyze_batch(batch, rig.models, nullptr);
    CHECK(rows.size() == 3);
    size_t reported = 0;
    for (const auto& row : rows) reported += row.error.empty() ? 1 : 0;
    CHECK(reported >= 2);
  }
  SUBCASE("timing is recorded") {
    AnalysisRow row = analyze(rig.records[0], rig.models, nullptr);
    CHECK(row.total_millis > 0.0);
    CHECK(row.cells[0].millis >= 0.0);
  }
  SUBCASE("analysis report serializes") {
    auto rows = analyze_batch({rig.records[0], rig.records[1]}, rig.models, nullptr);
    const std::string json = analysis_to_json(rows);
    CHECK(json.find("\"verdicts\"") != std::string::npos);
    CHECK(json.find(model.vulnerability) != std::string::npos);
  }
}

TEST_CASE("sibling path is preferred for large contracts with an index") {
  // large-class model with a handcrafted index containing the exact embedding
  std::string vuln = "dup-check";
  ModelSet models;
  models.models.push_back(
      VulnerabilityModel::random_init(vuln, SizeClass::Large, GridConfig::shipped(), 5));
  VulnerabilityModel& model = models.models[0];

  Rng rng(0x1a6);
  ContractRecord rec;
  rec.address = "0xquery";
  rec.bytecode = testutil::synthetic_contract(rng, 150, true);
  DisassemblyListing listing = disassemble(rec.bytecode);
  REQUIRE(route_by_size(listing).size_class == SizeClass::Large);
  ControlFlowGraph cfg = build_cfg(listing);
  Tensor nodes = encode_contract_nodes(cfg, listing, model.vocab, model.encoder);
  ContractEmbedding emb = embed_contract(cfg, nodes, model.sc2v, model.size_class);

  IndexSet indices;
  TrainingIndex index;
  index.vulnerability = vuln;
  index.dimension = emb.vector.size();
  index.entries.push_back({"twin", 1, emb.vector});
  indices.indices.push_back(std::move(index));

  SUBCASE("duplicate embedding: verdict comes from the sibling detector") {
    AnalysisRow row = analyze(rec, models, &indices);
    REQUIRE(row.cells.size() == 1);
    CHECK(row.cells[0].provenance == Provenance::SD);
    CHECK(row.cells[0].vulnerable);
    REQUIRE(row.cells[0].sibling.has_value());
    CHECK(row.cells[0].sibling->band_threshold == 0.0);
    CHECK_FALSE(row.cells[0].probability.has_value());  // classifier never ran
  }
  SUBCASE("far query: classifier decides") {
    indices.indices[0].entries[0].vector.assign(emb.vector.size(), 50.0f);
    AnalysisRow row = analyze(rec, models, &indices);
    CHECK(row.cells[0].provenance == Provenance::CC);
    CHECK(row.cells[0].probability.has_value());
  }
}

TEST_CASE("evaluate modes partition the test set") {
  std::string vuln = "dup-check";
  ModelSet models;
  models.models.push_back(
      VulnerabilityModel::random_init(vuln, SizeClass::Large, GridConfig::shipped(), 5));
  VulnerabilityModel& model = models.models[0];

  Rng rng(0x7e5);
  std::vector<ContractRecord> records;
  for (int i = 0; i < 10; ++i) {
    ContractRecord rec;
    rec.address = "0x" + std::to_string(i);
    rec.bytecode = testutil::synthetic_contract(rng, 130, i % 2 == 0);
    rec.labels[vuln] = i % 2 == 0 ? 1 : 0;
    records.push_back(std::move(rec));
  }

  // seed the index with the first four contracts' embeddings so the sibling
  // detector can judge exactly those
  IndexSet indices;
  TrainingIndex index;
  index.vulnerability = vuln;
  for (int i = 0; i < 4; ++i) {
    DisassemblyListing listing = disassemble(records[i].bytecode);
    ControlFlowGraph cfg = build_cfg(listing);
    Tensor nodes = encode_contract_nodes(cfg, listing, model.vocab, model.encoder);
    ContractEmbedding emb = embed_contract(cfg, nodes, model.sc2v, model.size_class);
    index.dimension = emb.vector.size();
    index.entries.push_back({records[i].address, records[i].labels[vuln], emb.vector});
  }
  indices.indices.push_back(std::move(index));

  auto easy = evaluate(records, models, &indices, EvalMode::SdEasy);
  auto hard = evaluate(records, models, &indices, EvalMode::CcHard);
  auto both = evaluate(records, models, &indices, EvalMode::SdCc);
  auto cc = evaluate(records, models, &indices, EvalMode::CcOnly);

  REQUIRE(easy.size() == 1);
  REQUIRE(hard.size() == 1);
  CHECK(easy[0].population + hard[0].population == records.size());
  CHECK(both[0].population == records.size());
  CHECK(cc[0].population == records.size());
  // sibling-judged contracts match their planted duplicates exactly
  CHECK(easy[0].population == 4);
  CHECK(easy[0].cm.tp + easy[0].cm.tn == 4);

  // the combined counts decompose into the two subsets
  CHECK(both[0].cm.tp == easy[0].cm.tp + hard[0].cm.tp);
  CHECK(both[0].cm.fp == easy[0].cm.fp + hard[0].cm.fp);
  CHECK(both[0].cm.tn == easy[0].cm.tn + hard[0].cm.tn);
  CHECK(both[0].cm.fn == easy[0].cm.fn + hard[0].cm.fn);

  SUBCASE("table rendering mirrors the published column order") {
    const std::string table = render_eval_table(cc, true);
    CHECK(table.find("Test size") != std::string::npos);
    CHECK(table.find("TP") != std::string::npos);
    CHECK(table.find("FNR") != std::string::npos);
    const size_t acc_pos = table.find("Accuracy");
    const size_t tp_pos = table.find(" TP");
    CHECK(tp_pos < acc_pos);
  }
  SUBCASE("missing labels raise") {
    records[0].labels.clear();
    CHECK_THROWS_AS(evaluate(records, models, &indices, EvalMode::CcOnly), Error);
  }
}

TEST_CASE("bytecode fetch over JSON-RPC") {
  httplib::Server server;
  std::string next_result = "0x6080604052";
  server.Post("/", [&](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    REQUIRE(body["method"] == "eth_getCode");
    nlohmann::json reply = {{"jsonrpc", "2.0"}, {"id", body["id"]}, {"result", next_result}};
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread serve([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string url = "http://127.0.0.1:" + std::to_string(port);

  SUBCASE("deployed code comes back parsed") {
    RawBytecode code = fetch_bytecode(url, "0x00000000000000000000000000000000000000aa");
    CHECK(code.bytes == parse_hex("6080604052").bytes);
  }
  SUBCASE("0x result raises EmptyCode") {
    next_result = "0x";
    try {
      fetch_bytecode(url, "0x00000000000000000000000000000000000000ab");
      FAIL("expected EmptyCode");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::EmptyCode);
    }
  }
  server.stop();
  serve.join();

  SUBCASE("unreachable endpoint raises after the timeout") {
    try {
      fetch_bytecode("http://127.0.0.1:1", "0x00", 0.5);
      FAIL("expected RpcError or Timeout");
    } catch (const Error& e) {
      CHECK((e.kind() == ErrorKind::RpcError || e.kind() == ErrorKind::Timeout));
    }
  }
}
