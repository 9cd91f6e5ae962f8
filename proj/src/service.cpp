#include "pkboin/service.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <semaphore>
#include <thread>
#include <vector>

#include "httplib.h"

namespace pkboin {

namespace {

struct ApiError {
  int status;
  std::string message;
};

[[noreturn]] void api_fail(int status, std::string message) { throw ApiError{status, std::move(message)}; }

Json error_body(int status, const std::string& message) {
  return Json{{"error", {{"status", status}, {"message", message}}}};
}

template <class F>
ServiceResponse guarded(F&& f) {
  try {
    return f();
  } catch (const ApiError& e) {
    return {e.status, error_body(e.status, e.message)};
  } catch (const std::invalid_argument& e) {
    return {400, error_body(400, e.what())};
  } catch (const std::exception& e) {
    return {500, error_body(500, e.what())};
  }
}

std::string random_id() {
  static std::mutex m;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lock(m);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(gen()));
  return buf;
}

std::string now_iso() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void check_keys(const Json& j, const std::set<std::string>& known, const std::string& what) {
  if (!j.is_object()) api_fail(400, what + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.contains(it.key())) api_fail(400, what + "." + it.key() + ": unknown field");
}

std::optional<double> optional_time(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_number()) api_fail(400, std::string(key) + ": expected a number of days");
  const double v = j.at(key).get<double>();
  if (!(v >= 0.0) || !std::isfinite(v)) api_fail(400, std::string(key) + ": must be a nonnegative number");
  return v;
}

// ---- session state and its pure transitions ----

struct SessionState {
  std::string id;
  std::string status = "accruing";
  TrialStateFile point;          // the latest decision point, flags as before that decision
  std::vector<DoseState> doses;  // flags after the latest decision
  int next_dose = 1;
  Json last_decision;
  Json obd;
  int enrolled() const { return static_cast<int>(point.patients.size()); }
};

Json state_doc(const SessionState& s) {
  Json doses = Json::array();
  for (const DoseState& d : s.doses) doses.push_back(to_json(d));
  return Json{{"id", s.id},
              {"status", s.status},
              {"design", std::string(to_string(s.point.params.kind))},
              {"params", to_json(s.point.params)},
              {"next_dose", s.status == "accruing" ? Json(s.next_dose) : Json(nullptr)},
              {"enrolled", s.enrolled()},
              {"max_n", s.point.params.max_n},
              {"cohort_size", s.point.params.cohort_size},
              {"state", to_json(s.point)},
              {"doses", doses},
              {"last_decision", s.last_decision},
              {"obd", s.obd}};
}

SessionState state_from_doc(const Json& doc) {
  SessionState s;
  s.id = doc.at("id").get<std::string>();
  s.status = doc.at("status").get<std::string>();
  s.point = trial_state_from_json(doc.at("state"));
  const Json& doses = doc.at("doses");
  for (std::size_t i = 0; i < doses.size(); ++i)
    s.doses.push_back(dose_state_from_json(doses[i], "doses[" + std::to_string(i) + "]"));
  s.next_dose = doc.at("next_dose").is_null() ? s.point.current_dose : doc.at("next_dose").get<int>();
  s.last_decision = doc.at("last_decision");
  s.obd = doc.at("obd");
  return s;
}

bool has_pending(const TrialStateFile& t, double at) {
  for (const PatientRecord& p : t.patients) {
    if (!ascertained_value(p.tox, p.enroll_time, t.params.tox_window, at) ||
        !ascertained_value(p.eff, p.enroll_time, t.params.eff_window, at))
      return true;
  }
  return false;
}

// Decision at the latest decision point, evaluated at `at` for TITE designs.
Decision evaluate_point(const SessionState& s, std::optional<double> at, std::vector<DoseState>* flags) {
  TrialStateFile point = s.point;
  if (is_tite(point.params.kind) && at) point.time = *at;
  StateDecision sd = decide_from_state(point);
  if (flags) *flags = std::move(sd.states);
  return sd.decision;
}

void apply_decision(SessionState& s, const Decision& d, std::vector<DoseState> flags) {
  s.doses = std::move(flags);
  s.last_decision = to_json(d);
  switch (d.action) {
    case Action::terminate:
      s.status = "terminated";
      break;
    case Action::suspend:
      s.status = "suspended";
      break;
    case Action::treat:
      s.status = "accruing";
      s.next_dose = d.dose;
      break;
  }
}

SessionState make_session(const Json& body, const std::string& id) {
  check_keys(body, {"design", "params"}, "body");
  SessionState s;
  s.id = id;
  try {
    Json file = Json::object();
    if (body.contains("design")) file["design"] = body.at("design");
    if (body.contains("params")) file["params"] = body.at("params");
    s.point = trial_state_from_json(file);
  } catch (const std::invalid_argument& e) {
    api_fail(400, e.what());
  }
  s.point.time = 0.0;
  std::vector<DoseState> flags;
  const Decision d = evaluate_point(s, std::nullopt, &flags);
  apply_decision(s, d, std::move(flags));
  return s;
}

Json apply_cohort(SessionState& s, const Json& body) {
  if (s.status == "complete" || s.status == "terminated") api_fail(409, "trial is " + s.status);
  if (s.status == "suspended")
    api_fail(409, "accrual is suspended; confirm a new recommendation once outcomes are ascertained");
  check_keys(body, {"patients", "time"}, "body");
  const DesignParams& params = s.point.params;
  if (!body.contains("patients") || !body.at("patients").is_array())
    api_fail(400, "patients: expected an array");
  const Json& list = body.at("patients");
  if (static_cast<int>(list.size()) != params.cohort_size)
    api_fail(422, "patients: expected a cohort of " + std::to_string(params.cohort_size) + ", got " +
                      std::to_string(list.size()));
  if (s.enrolled() + params.cohort_size > params.max_n)
    api_fail(409, "maximum sample size of " + std::to_string(params.max_n) + " reached");

  const double clock = s.point.time.value_or(0.0);
  const std::optional<double> time = optional_time(body, "time");
  int next_id = 1;
  for (const PatientRecord& p : s.point.patients) next_id = std::max(next_id, p.id + 1);

  std::vector<PatientRecord> cohort;
  double latest_enroll = clock;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string path = "patients[" + std::to_string(i) + "]";
    Json p = list[i];
    if (!p.is_object()) api_fail(400, path + ": expected an object");
    if (p.contains("dose") && p.at("dose") != Json(s.next_dose))
      api_fail(422, path + ".dose: the cohort must be treated at the recommended dose " +
                        std::to_string(s.next_dose));
    if (p.contains("id")) api_fail(400, path + ".id: assigned by the server");
    p["dose"] = s.next_dose;
    p["id"] = next_id + static_cast<int>(i);
    if (!p.contains("enroll_time")) p["enroll_time"] = time.value_or(clock);
    PatientRecord rec;
    try {
      rec = patient_from_json(p, path);
    } catch (const std::invalid_argument& e) {
      api_fail(400, e.what());
    }
    if (rec.enroll_time < clock) api_fail(422, path + ".enroll_time: earlier than the trial clock");
    if (!is_tite(params.kind) && (!rec.tox.value || !rec.eff.value))
      api_fail(422, path + ": pending outcomes need a TITE design");
    latest_enroll = std::max(latest_enroll, rec.enroll_time);
    cohort.push_back(rec);
  }
  const double at = time.value_or(latest_enroll);
  if (at < latest_enroll) api_fail(422, "time: earlier than an enrollment time");

  s.point.params = params;
  s.point.doses = s.doses;
  s.point.current_dose = s.next_dose;
  s.point.time = at;
  for (const PatientRecord& p : cohort) s.point.patients.push_back(p);

  std::vector<DoseState> flags;
  const Decision d = evaluate_point(s, std::nullopt, &flags);
  apply_decision(s, d, std::move(flags));
  return s.last_decision;
}

Json apply_outcomes(SessionState& s, int patient_id, const Json& body) {
  if (s.status == "complete" || s.status == "terminated") api_fail(409, "trial is " + s.status);
  check_keys(body, {"tox", "eff", "time"}, "body");
  PatientRecord* target = nullptr;
  for (PatientRecord& p : s.point.patients)
    if (p.id == patient_id) target = &p;
  if (!target) api_fail(404, "unknown patient " + std::to_string(patient_id));

  Json current = to_json(*target);
  for (const char* key : {"tox", "eff"}) {
    if (!body.contains(key)) continue;
    if (!current.at(key).at("value").is_null())
      api_fail(409, std::string(key) + ": outcome already recorded for patient " + std::to_string(patient_id));
    current[key] = body.at(key);
  }
  PatientRecord updated;
  try {
    updated = patient_from_json(current, "patient");
  } catch (const std::invalid_argument& e) {
    api_fail(400, e.what());
  }
  *target = updated;
  if (const auto t = optional_time(body, "time")) {
    if (*t < s.point.time.value_or(0.0)) api_fail(422, "time: earlier than the trial clock");
    s.point.time = *t;
  }
  return to_json(updated);
}

Json apply_confirm(SessionState& s, const Json& body) {
  if (s.status == "complete" || s.status == "terminated") api_fail(409, "trial is " + s.status);
  check_keys(body, {"at_time"}, "body");
  const std::optional<double> at = optional_time(body, "at_time");
  if (at && *at < s.point.time.value_or(0.0)) api_fail(422, "at_time: earlier than the trial clock");
  if (at && is_tite(s.point.params.kind)) s.point.time = *at;
  std::vector<DoseState> flags;
  const Decision d = evaluate_point(s, std::nullopt, &flags);
  apply_decision(s, d, std::move(flags));
  return s.last_decision;
}

Json apply_finalize(SessionState& s, const Json& body) {
  if (s.status == "complete") api_fail(409, "trial is already complete");
  check_keys(body, {"force", "time"}, "body");
  bool force = false;
  if (body.contains("force")) {
    if (!body.at("force").is_boolean()) api_fail(400, "force: expected a boolean");
    force = body.at("force").get<bool>();
  }
  const std::optional<double> time = optional_time(body, "time");
  const bool terminated = s.status == "terminated";
  if (!force && !terminated && s.enrolled() < s.point.params.max_n)
    api_fail(409, "maximum sample size not reached; pass force to finalize early");

  TrialStateFile final_state = s.point;
  final_state.doses = s.doses;
  if (time) {
    if (*time < s.point.time.value_or(0.0)) api_fail(422, "time: earlier than the trial clock");
    final_state.time = *time;
  }
  if (is_tite(final_state.params.kind)) {
    if (!force && has_pending(final_state, final_state.time.value_or(0.0)))
      api_fail(409, "outcomes are still pending; wait for the assessment windows or pass force");
  }
  ObdResult r = finalize_from_state(final_state);
  if (terminated) r.selected.reset();
  s.point.time = final_state.time;
  s.obd = to_json(r);
  s.status = (terminated || r.all_eliminated) ? "terminated" : "complete";
  return s.obd;
}

Json log_entry(std::size_t seq, const std::string& op, Json input, const Json& result) {
  return Json{{"seq", seq}, {"at", now_iso()}, {"op", op}, {"input", std::move(input)}, {"result", result}};
}

}  // namespace

Json replay_session_log(const Json& log) {
  if (!log.is_array() || log.empty() || log.front().at("op") != "create")
    throw std::invalid_argument("log must start with a create entry");
  SessionState s = make_session(log.front().at("input").at("body"), log.front().at("input").at("id"));
  for (std::size_t i = 1; i < log.size(); ++i) {
    const Json& e = log[i];
    const std::string op = e.at("op").get<std::string>();
    const Json& in = e.at("input");
    try {
      if (op == "cohort") apply_cohort(s, in);
      else if (op == "outcome") apply_outcomes(s, in.at("patient_id").get<int>(), in.at("body"));
      else if (op == "confirm") apply_confirm(s, in);
      else if (op == "finalize") apply_finalize(s, in);
      else throw std::invalid_argument("unknown log op " + op);
    } catch (const ApiError& err) {
      throw std::runtime_error("replay of entry " + std::to_string(i) + " failed: " + err.message);
    }
  }
  return state_doc(s);
}

// ---- service ----

struct ConductService::Session {
  std::string id;
  std::mutex write;
  std::shared_ptr<const Json> doc;  // published snapshot, including the log
  std::shared_ptr<const Json> load() const { return std::atomic_load(&doc); }
  void publish(Json d) { std::atomic_store(&doc, std::shared_ptr<const Json>(std::make_shared<Json>(std::move(d)))); }
};

struct ConductService::Job {
  std::string id;
  RunConfig config;
  long long total = 0;
  std::atomic<int> done{0};
  mutable std::mutex m;
  std::string status = "queued";
  std::vector<OperatingCharacteristics> results;
  std::string error;
};

struct ConductService::JobPool {
  explicit JobPool(int slots) : slots(std::max(slots, 1)) {}
  std::counting_semaphore<1024> slots;
  std::mutex m;
  std::vector<std::jthread> threads;
};

ConductService::ConductService(ServiceOptions options)
    : options_(std::move(options)), pool_(std::make_unique<JobPool>(options_.max_jobs)) {
  std::filesystem::create_directories(options_.data_dir / "trials");
  load_sessions();
}

ConductService::~ConductService() { wait_for_jobs(); }

void ConductService::wait_for_jobs() {
  std::vector<std::jthread> threads;
  {
    std::lock_guard lock(pool_->m);
    threads.swap(pool_->threads);
  }
  for (auto& t : threads)
    if (t.joinable()) t.join();
}

void ConductService::load_sessions() {
  for (const auto& entry : std::filesystem::directory_iterator(options_.data_dir / "trials")) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    Json doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.contains("id")) continue;
    auto session = std::make_shared<Session>();
    session->id = doc.at("id").get<std::string>();
    session->publish(std::move(doc));
    sessions_[session->id] = session;
  }
}

void ConductService::persist(const Session& session, const Json& doc) const {
  const auto dir = options_.data_dir / "trials";
  const auto tmp = dir / (session.id + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << doc.dump(1);
    if (!out) throw std::runtime_error("cannot write session file " + tmp.string());
  }
  std::filesystem::rename(tmp, dir / (session.id + ".json"));
}

std::shared_ptr<ConductService::Session> ConductService::find_session(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::shared_ptr<ConductService::Job> ConductService::find_job(const std::string& id) const {
  std::shared_lock lock(jobs_mutex_);
  const auto it = jobs_.find(id);
  return it == jobs_.end() ? nullptr : it->second;
}


ServiceResponse ConductService::create_trial(const Json& body) {
  return guarded([&] {
    const std::string id = random_id();
    SessionState s = make_session(body, id);
    Json doc = state_doc(s);
    doc["log"] = Json::array({log_entry(0, "create", Json{{"id", id}, {"body", body}}, s.last_decision)});
    auto session = std::make_shared<Session>();
    session->id = id;
    persist(*session, doc);
    session->publish(doc);
    {
      std::unique_lock lock(sessions_mutex_);
      sessions_[id] = session;
    }
    return ServiceResponse{201, doc};
  });
}

ServiceResponse ConductService::get_trial(const std::string& id) const {
  const auto session = find_session(id);
  if (!session) return {404, error_body(404, "unknown trial " + id)};
  return {200, *session->load()};
}


namespace {

struct Mutation {
  Json input;
  Json result;
  std::string key;  // name of the result in the response body
};

// Runs one logged mutation under the session's write lock and publishes the
// new document once it is persisted.
template <class S, class Persist, class Op>
ServiceResponse logged_mutation(S& session, Persist&& persist, const std::string& op_name, Op&& op) {
  return guarded([&] {
    std::lock_guard lock(session.write);
    const auto doc = session.load();
    SessionState s = state_from_doc(*doc);
    Mutation m = op(s);
    Json next = state_doc(s);
    next["log"] = doc->at("log");
    next["log"].push_back(log_entry(next["log"].size(), op_name, m.input, m.result));
    persist(next);
    session.publish(next);
    return ServiceResponse{200, Json{{m.key, m.result}, {"trial", next}}};
  });
}

}  // namespace

ServiceResponse ConductService::submit_cohort(const std::string& id, const Json& body) {
  const auto session = find_session(id);
  if (!session) return {404, error_body(404, "unknown trial " + id)};
  return logged_mutation(*session, [&](const Json& d) { persist(*session, d); }, "cohort",
                         [&](SessionState& s) { return Mutation{body, apply_cohort(s, body), "decision"}; });
}

ServiceResponse ConductService::update_outcomes(const std::string& id, int patient_id, const Json& body) {
  const auto session = find_session(id);
  if (!session) return {404, error_body(404, "unknown trial " + id)};
  return logged_mutation(*session, [&](const Json& d) { persist(*session, d); }, "outcome",
                         [&](SessionState& s) {
                           return Mutation{Json{{"patient_id", patient_id}, {"body", body}},
                                           apply_outcomes(s, patient_id, body), "patient"};
                         });
}

ServiceResponse ConductService::recommendation(const std::string& id, std::optional<double> at_time,
                                               bool confirm) {
  const auto session = find_session(id);
  if (!session) return {404, error_body(404, "unknown trial " + id)};
  if (confirm) {
    const Json input = at_time ? Json{{"at_time", *at_time}} : Json::object();
    return logged_mutation(*session, [&](const Json& d) { persist(*session, d); }, "confirm",
                           [&](SessionState& s) { return Mutation{input, apply_confirm(s, input), "decision"}; });
  }
  return guarded([&] {
    const SessionState s = state_from_doc(*session->load());
    if (at_time && *at_time < s.point.time.value_or(0.0))
      api_fail(422, "at_time: earlier than the trial clock");
    if (!is_tite(s.point.params.kind)) return ServiceResponse{200, Json{{"decision", s.last_decision}}};
    const Decision d = evaluate_point(s, at_time, nullptr);
    return ServiceResponse{200, Json{{"decision", to_json(d)}}};
  });
}

ServiceResponse ConductService::finalize(const std::string& id, const Json& body) {
  const auto session = find_session(id);
  if (!session) return {404, error_body(404, "unknown trial " + id)};
  const Json input = body.is_null() ? Json::object() : body;
  return logged_mutation(*session, [&](const Json& d) { persist(*session, d); }, "finalize",
                         [&](SessionState& s) { return Mutation{input, apply_finalize(s, input), "obd"}; });
}

ServiceResponse ConductService::create_simulation(const Json& body) {
  return guarded([&] {
    auto job = std::make_shared<Job>();
    job->id = random_id();
    job->config = parse_config(body);
    if (job->config.threads == 0) job->config.threads = options_.job_threads;
    job->total = study_size(job->config);
    {
      std::unique_lock lock(jobs_mutex_);
      jobs_[job->id] = job;
    }
    std::lock_guard lock(pool_->m);
    pool_->threads.emplace_back([job, pool = pool_.get()] {
      pool->slots.acquire();
      {
        std::lock_guard l(job->m);
        job->status = "running";
      }
      try {
        auto results = run_study(job->config, &job->done);
        std::lock_guard l(job->m);
        job->results = std::move(results);
        job->status = "done";
      } catch (const std::exception& e) {
        std::lock_guard l(job->m);
        job->error = e.what();
        job->status = "failed";
      }
      pool->slots.release();
    });
    return ServiceResponse{202, Json{{"id", job->id}, {"status", "queued"}, {"total", job->total}}};
  });
}

ServiceResponse ConductService::get_simulation(const std::string& id) const {
  const auto job = find_job(id);
  if (!job) return {404, error_body(404, "unknown simulation " + id)};
  std::lock_guard lock(job->m);
  Json body{{"id", job->id}, {"status", job->status}, {"total", job->total}};
  if (job->status == "done") {
    body["progress"] = 1.0;
    body["completed"] = job->total;
    Json rows = Json::array();
    for (const auto& oc : job->results) rows.push_back(to_json(oc));
    body["result"] = Json{{"results", rows}};
  } else {
    const long long done = job->done.load(std::memory_order_relaxed);
    body["completed"] = done;
    // Stays below 1 until the result is published.
    body["progress"] = job->total > 0 ? std::min(0.999, static_cast<double>(done) / job->total) : 0.0;
    if (job->status == "failed") body["error"] = job->error;
  }
  return {200, body};
}

void ConductService::bind(httplib::Server& server) {
  auto reply = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto parse_body = [](const httplib::Request& req, Json& out) -> std::optional<ServiceResponse> {
    if (req.body.empty()) {
      out = Json::object();
      return std::nullopt;
    }
    out = Json::parse(req.body, nullptr, false);
    if (out.is_discarded()) return ServiceResponse{400, error_body(400, "request body is not valid JSON")};
    return std::nullopt;
  };

  server.Post("/api/v1/trials", [=, this](const httplib::Request& req, httplib::Response& res) {
    Json body;
    if (auto err = parse_body(req, body)) return reply(res, *err);
    reply(res, create_trial(body));
  });
  server.Get(R"(/api/v1/trials/([0-9a-f]+))", [=, this](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_trial(req.matches[1]));
  });
  server.Post(R"(/api/v1/trials/([0-9a-f]+)/cohorts)",
              [=, this](const httplib::Request& req, httplib::Response& res) {
                Json body;
                if (auto err = parse_body(req, body)) return reply(res, *err);
                reply(res, submit_cohort(req.matches[1], body));
              });
  server.Post(R"(/api/v1/trials/([0-9a-f]+)/patients/(\d+)/outcomes)",
              [=, this](const httplib::Request& req, httplib::Response& res) {
                Json body;
                if (auto err = parse_body(req, body)) return reply(res, *err);
                reply(res, update_outcomes(req.matches[1], std::stoi(req.matches[2]), body));
              });
  auto time_param = [](const httplib::Request& req, std::optional<double>& out) -> std::optional<ServiceResponse> {
    if (!req.has_param("at_time")) return std::nullopt;
    const std::string raw = req.get_param_value("at_time");
    try {
      std::size_t used = 0;
      out = std::stod(raw, &used);
      if (used != raw.size() || !std::isfinite(*out) || *out < 0.0) throw std::invalid_argument(raw);
    } catch (const std::exception&) {
      return ServiceResponse{400, error_body(400, "at_time: expected a nonnegative number of days")};
    }
    return std::nullopt;
  };
  server.Get(R"(/api/v1/trials/([0-9a-f]+)/recommendation)",
             [=, this](const httplib::Request& req, httplib::Response& res) {
               std::optional<double> at;
               if (auto err = time_param(req, at)) return reply(res, *err);
               reply(res, recommendation(req.matches[1], at, false));
             });
  server.Post(R"(/api/v1/trials/([0-9a-f]+)/recommendation)",
              [=, this](const httplib::Request& req, httplib::Response& res) {
                Json body;
                if (auto err = parse_body(req, body)) return reply(res, *err);
                std::optional<double> at;
                if (body.is_object() && body.contains("at_time")) {
                  if (!body.at("at_time").is_number())
                    return reply(res, {400, error_body(400, "at_time: expected a number")});
                  at = body.at("at_time").get<double>();
                }
                reply(res, recommendation(req.matches[1], at, true));
              });
  server.Post(R"(/api/v1/trials/([0-9a-f]+)/finalize)",
              [=, this](const httplib::Request& req, httplib::Response& res) {
                Json body;
                if (auto err = parse_body(req, body)) return reply(res, *err);
                reply(res, finalize(req.matches[1], body));
              });
  server.Post("/api/v1/simulations", [=, this](const httplib::Request& req, httplib::Response& res) {
    Json body;
    if (auto err = parse_body(req, body)) return reply(res, *err);
    reply(res, create_simulation(body));
  });
  server.Get(R"(/api/v1/simulations/([0-9a-f]+))", [=, this](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_simulation(req.matches[1]));
  });
  if (options_.ui_dir) server.set_mount_point("/", options_.ui_dir->string());
}

}  // namespace pkboin
