#include "fewgen/generator.hpp"

#include <cstdio>
#include <cstdlib>

#include "fewgen/util.hpp"
#include "json.hpp"

namespace fewgen {

ScriptedStubGenerator::ScriptedStubGenerator(std::vector<std::string> script)
    : script_(std::move(script)) {
  if (script_.empty()) throw std::invalid_argument("stub generator needs a non-empty script");
}

ScriptedStubGenerator::ScriptedStubGenerator(
    std::function<std::string(const std::string&, std::size_t)> fn)
    : fn_(std::move(fn)) {}

std::string ScriptedStubGenerator::generate(const std::string& conditioning,
                                            const SamplingParams&) {
  std::size_t call = calls_++;
  if (fn_) return fn_(conditioning, call);
  return script_[call % script_.size()];
}

const char* ExternalProcessGenerator::kEnvVar = "FEWGEN_BASE_LM";

ExternalProcessGenerator::ExternalProcessGenerator(std::string command)
    : command_(std::move(command)) {
  if (command_.empty()) {
    const char* env = std::getenv(kEnvVar);
    if (env != nullptr) command_ = env;
  }
  if (command_.empty())
    throw DataError(std::string("no base language model configured: set ") + kEnvVar +
                    " to a command that reads a JSON request on stdin and prints one "
                    "generated sentence on stdout");
}

std::string ExternalProcessGenerator::generate(const std::string& conditioning,
                                               const SamplingParams& params) {
  nlohmann::json req = {{"conditioning", conditioning},
                        {"top_k", params.top_k},
                        {"seed", params.seed},
                        {"max_new_words", params.max_new_words}};
  std::string request = req.dump();
  // Single-quote the payload for the shell; embedded quotes are escaped.
  std::string quoted;
  for (char c : request) {
    if (c == '\'') quoted += "'\\''";
    else quoted.push_back(c);
  }
  std::string cmd = "printf '%s' '" + quoted + "' | " + command_;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) throw DataError("failed to launch base LM command: " + command_);
  std::string out;
  char buf[4096];
  while (std::fgets(buf, sizeof(buf), pipe) != nullptr) out += buf;
  int rc = pclose(pipe);
  if (rc != 0)
    throw DataError("base LM command failed with status " + std::to_string(rc));
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out;
}

}  // namespace fewgen
