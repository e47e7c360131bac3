#include "crowdroute/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "codec.hpp"
#include "crowdroute/error.hpp"

namespace crowdroute::io {

namespace {

struct Line {
  std::size_t number;
  std::vector<std::string> fields;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<Line> records(const std::string& text, std::size_t min_fields, std::size_t max_fields) {
  std::vector<Line> out;
  std::istringstream in(text);
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (trim(raw).empty() || trim(raw).front() == '#') continue;
    auto fields = split(raw, '\t');
    for (auto& f : fields) f = trim(f);
    if (fields.size() < min_fields || fields.size() > max_fields) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(number) + ": expected " + std::to_string(min_fields) +
                                         (min_fields == max_fields ? "" : "-" + std::to_string(max_fields)) +
                                         " tab-separated fields, got " + std::to_string(fields.size()));
    }
    out.push_back({number, std::move(fields)});
  }
  return out;
}

template <typename T>
T number(const std::string& s, std::size_t line, const char* what) {
  T value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": bad " + what + " '" + s + "'");
  }
  return value;
}

std::string nonempty(const std::string& s, std::size_t line, const char* what) {
  if (s.empty()) throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": empty " + what);
  return s;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = j.size();
  const auto cols = rows == 0 ? 0 : j.at(0).size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j.at(r).size() != cols) throw Error(ErrorCode::kParse, "ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

json matrix_to(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kStorage, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kStorage, "write failed for " + path);
}

std::vector<Landmark> parse_landmarks(const std::string& text) {
  std::vector<Landmark> out;
  SignificanceMap raw;
  for (const auto& [line, f] : records(text, 4, 5)) {
    Landmark l;
    l.id = nonempty(f[0], line, "landmark id");
    l.name = f[1];
    l.location = {number<double>(f[2], line, "latitude"), number<double>(f[3], line, "longitude")};
    raw[l.id] = f.size() == 5 ? number<double>(f[4], line, "significance") : 0.0;
    out.push_back(std::move(l));
  }
  const auto normalized = min_max_normalize(raw);
  for (auto& l : out) l.significance = normalized.at(l.id);
  LandmarkIndex check(out);  // validates ids and coordinates
  return out;
}

std::string format_landmarks(const std::vector<Landmark>& landmarks) {
  std::string out = "# id\tname\tlat\tlon\tsignificance\n";
  for (const auto& l : landmarks) {
    out += l.id + '\t' + l.name + '\t' + fmt(l.location.lat) + '\t' + fmt(l.location.lon) + '\t' +
           fmt(l.significance) + '\n';
  }
  return out;
}

std::vector<VisitEvent> parse_checkins(const std::string& text) {
  std::vector<VisitEvent> out;
  for (const auto& [line, f] : records(text, 3, 4)) {
    VisitEvent e;
    e.traveller = nonempty(f[0], line, "traveller");
    e.landmark = nonempty(f[1], line, "landmark");
    e.timestamp = number<std::int64_t>(f[2], line, "timestamp");
    if (f.size() == 4) e.weight = number<double>(f[3], line, "weight");
    out.push_back(std::move(e));
  }
  return out;
}

SignificanceMap parse_significance(const std::string& text) {
  SignificanceMap out;
  for (const auto& [line, f] : records(text, 2, 2)) {
    out[nonempty(f[0], line, "landmark")] = number<double>(f[1], line, "significance");
  }
  return out;
}

std::string format_significance(const SignificanceMap& scores) {
  std::string out;
  for (const auto& [id, s] : scores) out += id + '\t' + fmt(s) + '\n';
  return out;
}

std::vector<CandidateSet::Entry> parse_landmark_routes(const std::string& text) {
  std::vector<CandidateSet::Entry> out;
  for (const auto& [line, f] : records(text, 2, 2)) {
    std::vector<LandmarkId> ids;
    std::istringstream in(f[1]);
    for (std::string id; in >> id;) ids.push_back(id);
    if (ids.empty()) throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": route has no landmarks");
    out.push_back({nonempty(f[0], line, "source tag"), LandmarkRoute(std::move(ids))});
  }
  return out;
}

std::string format_landmark_routes(const std::vector<CandidateSet::Entry>& routes) {
  std::string out;
  for (const auto& e : routes) {
    out += e.source + '\t';
    const auto& seq = e.route.sequence();
    for (std::size_t i = 0; i < seq.size(); ++i) out += (i ? " " : "") + seq[i];
    out += '\n';
  }
  return out;
}

std::vector<std::pair<std::string, RawRoute>> parse_raw_routes(const std::string& text) {
  std::vector<std::pair<std::string, RawRoute>> out;
  for (const auto& [line, f] : records(text, 2, 2)) {
    RawRoute route;
    std::istringstream in(f[1]);
    for (std::string pair; in >> pair;) {
      const auto comma = pair.find(',');
      if (comma == std::string::npos) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": expected lat,lon but got '" + pair + "'");
      }
      route.points.push_back({number<double>(pair.substr(0, comma), line, "latitude"),
                              number<double>(pair.substr(comma + 1), line, "longitude")});
    }
    out.emplace_back(nonempty(f[0], line, "source tag"), std::move(route));
  }
  return out;
}

std::vector<WorkerProfile> parse_workers(const std::string& text) {
  std::vector<WorkerProfile> out;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto t = trim(raw);
    if (t.empty() || t.front() == '#') continue;
    try {
      out.push_back(json::parse(t).get<WorkerProfile>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

std::string format_workers(const std::vector<WorkerProfile>& workers) {
  std::string out;
  for (const auto& w : workers) out += json(w).dump() + '\n';
  return out;
}

std::string format_factors(const LatentFactors& f) {
  json j{{"workers", f.workers},
         {"landmarks", f.landmarks},
         {"w", matrix_to(f.w)},
         {"l", matrix_to(f.l)},
         {"iterations", f.iterations},
         {"objective", f.objective},
         {"gradient_norm", f.gradient_norm},
         {"final_learning_rate", f.final_learning_rate},
         {"effective_rank", f.effective_rank},
         {"config",
          {{"d", f.config.latent_dim},
           {"lambda_w", f.config.lambda_w},
           {"lambda_l", f.config.lambda_l},
           {"lr", f.config.learning_rate},
           {"max_iters", f.config.max_iters},
           {"tol", f.config.tol},
           {"seed", f.config.seed}}}};
  return j.dump(2) + '\n';
}

LatentFactors parse_factors(const std::string& text) {
  try {
    const auto j = json::parse(text);
    LatentFactors f;
    f.workers = j.at("workers").get<std::vector<WorkerId>>();
    f.landmarks = j.at("landmarks").get<std::vector<LandmarkId>>();
    f.w = matrix_from(j.at("w"));
    f.l = matrix_from(j.at("l"));
    f.iterations = j.value("iterations", std::size_t{0});
    f.objective = j.value("objective", 0.0);
    f.gradient_norm = j.value("gradient_norm", 0.0);
    f.final_learning_rate = j.value("final_learning_rate", 0.0);
    f.effective_rank = j.value("effective_rank", std::size_t{0});
    if (j.contains("config")) {
      const auto& c = j.at("config");
      f.config.latent_dim = c.value("d", f.config.latent_dim);
      f.config.lambda_w = c.value("lambda_w", f.config.lambda_w);
      f.config.lambda_l = c.value("lambda_l", f.config.lambda_l);
      f.config.learning_rate = c.value("lr", f.config.learning_rate);
      f.config.max_iters = c.value("max_iters", f.config.max_iters);
      f.config.tol = c.value("tol", f.config.tol);
      f.config.seed = c.value("seed", f.config.seed);
    }
    if (static_cast<std::size_t>(f.w.cols()) != f.workers.size() ||
        static_cast<std::size_t>(f.l.cols()) != f.landmarks.size() || f.w.rows() != f.l.rows()) {
      throw Error(ErrorCode::kDimensionMismatch, "factor matrices do not match their id lists");
    }
    return f;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("factors: ") + e.what());
  }
}

std::string format_matrix(const ScoreMatrix& matrix) { return json(matrix).dump(2) + '\n'; }

AccumulatedMatrix parse_accumulated(const std::string& text) {
  try {
    return accumulated_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("matrix: ") + e.what());
  }
}

}  // namespace crowdroute::io
