#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "pkboin/io.hpp"

namespace httplib {
class Server;
}

namespace pkboin {

struct ServiceOptions {
  std::filesystem::path data_dir = "pkboin-data";  // trial sessions are stored here
  std::optional<std::filesystem::path> ui_dir;     // served at "/" when set
  int max_jobs = 2;     // simulation jobs running at once
  int job_threads = 0;  // workers per job when the config leaves it open
};

struct ServiceResponse {
  int status = 200;
  Json body;
};

/// Live trial sessions and simulation jobs. Every handler returns a status
/// code and a JSON body; `bind` wires them to HTTP routes under /api/v1.
class ConductService {
 public:
  explicit ConductService(ServiceOptions options);
  ~ConductService();
  ConductService(const ConductService&) = delete;
  ConductService& operator=(const ConductService&) = delete;

  ServiceResponse create_trial(const Json& body);
  ServiceResponse get_trial(const std::string& id) const;
  ServiceResponse submit_cohort(const std::string& id, const Json& body);
  ServiceResponse update_outcomes(const std::string& id, int patient_id, const Json& body);
  /// Decision at `at_time` (defaults to the session clock). Logged and
  /// applied to the session only when `confirm` is set.
  ServiceResponse recommendation(const std::string& id, std::optional<double> at_time,
                                 bool confirm = false);
  ServiceResponse finalize(const std::string& id, const Json& body);

  ServiceResponse create_simulation(const Json& body);
  ServiceResponse get_simulation(const std::string& id) const;

  /// Blocks until every simulation job has finished.
  void wait_for_jobs();

  void bind(httplib::Server& server);

 private:
  struct Session;
  struct Job;

  std::shared_ptr<Session> find_session(const std::string& id) const;
  std::shared_ptr<Job> find_job(const std::string& id) const;
  void persist(const Session& session, const Json& doc) const;
  void load_sessions();

  ServiceOptions options_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  mutable std::shared_mutex jobs_mutex_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  struct JobPool;
  std::unique_ptr<JobPool> pool_;
};

/// Rebuilds a session document by replaying the inputs of its decision log.
Json replay_session_log(const Json& log);

}  // namespace pkboin
