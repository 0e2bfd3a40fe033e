#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace fewgen {

struct SamplingParams {
  int top_k = 2;
  std::uint64_t seed = 0;
  int max_new_words = 30;
};

// Sentence generator behind the LM-augmentation harness. Implementations:
// a scripted stub (tests), a from-scratch in-domain causal LM (builtin), and
// an external command wrapping a real pretrained LM.
class GeneratorInterface {
 public:
  virtual ~GeneratorInterface() = default;

  // Returns one generated sentence conditioned on `conditioning`.
  virtual std::string generate(const std::string& conditioning,
                               const SamplingParams& params) = 0;

  // Whether concurrent generate() calls are permitted; the harness serializes
  // calls when not.
  virtual bool supports_concurrent_calls() const { return false; }
};

// Deterministic test double: either cycles a fixed script or delegates to a
// callback receiving (conditioning, call index).
class ScriptedStubGenerator : public GeneratorInterface {
 public:
  explicit ScriptedStubGenerator(std::vector<std::string> script);
  explicit ScriptedStubGenerator(
      std::function<std::string(const std::string&, std::size_t)> fn);

  std::string generate(const std::string& conditioning, const SamplingParams& params) override;
  std::size_t calls() const { return calls_; }

 private:
  std::vector<std::string> script_;
  std::function<std::string(const std::string&, std::size_t)> fn_;
  std::size_t calls_ = 0;
};

// Shells out to a user-provided command (one generation per invocation). The
// command receives a JSON request on stdin:
//   {"conditioning": "...", "top_k": 2, "seed": 123, "max_new_words": 30}
// and must print the generated sentence on stdout. The command comes from the
// FEWGEN_BASE_LM environment variable unless given explicitly.
class ExternalProcessGenerator : public GeneratorInterface {
 public:
  explicit ExternalProcessGenerator(std::string command = "");

  std::string generate(const std::string& conditioning, const SamplingParams& params) override;

  static const char* kEnvVar;

 private:
  std::string command_;
};

}  // namespace fewgen
