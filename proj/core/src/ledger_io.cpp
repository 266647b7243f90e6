#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "dv/errors.hpp"
#include "dv/estimators.hpp"

namespace dv {

using nlohmann::json;

void write_ledger_jsonl(std::ostream& out, const SampleLedger& ledger) {
  json header = {{"n", ledger.n},
                 {"sampler_seed", ledger.sampler_seed},
                 {"scheme", to_string(ledger.scheme)}};
  out << header.dump() << '\n';
  for (std::size_t idx = 0; idx < ledger.draws.size(); ++idx) {
    const auto& d = ledger.draws[idx];
    json rec = {{"idx", idx},
                {"subset", d.subset.to_string()},
                {"score", d.score},
                {"eval_seed", d.eval_seed}};
    out << rec.dump() << '\n';
  }
}

SampleLedger read_ledger_jsonl(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, "empty ledger stream");
  SampleLedger ledger;
  try {
    const json header = json::parse(line);
    ledger.n = header.at("n").get<std::size_t>();
    ledger.sampler_seed = header.at("sampler_seed").get<std::uint64_t>();
    ledger.scheme = parse_scheme(header.at("scheme").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("ledger header: ") + e.what());
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      const auto idx = rec.at("idx").get<std::size_t>();
      if (idx != ledger.draws.size()) {
        throw Error(ErrorCode::kParseError, "draw index out of order at line " +
                                                std::to_string(line_no));
      }
      LedgerDraw d;
      d.subset = SubsetKey::parse(ledger.n, rec.at("subset").get<std::string>());
      d.score = rec.at("score").get<double>();
      d.eval_seed = rec.at("eval_seed").get<std::uint64_t>();
      ledger.draws.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError,
                  "ledger line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return ledger;
}

}  // namespace dv
