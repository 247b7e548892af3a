#pragma once

#include "aspcomp/interp.hpp"
#include "aspcomp/language.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

namespace aspcomp {

// Content hash of lambda's canonical text (lambda_r then lambda_c): lowercase
// hex, fixed length, stable across runs and platforms.
std::string program_hash(const Program& lambda_r, const Program& lambda_c);
std::string sha256_hex(std::string_view bytes);

enum class Backend { interp, emit };

struct CacheStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t builds = 0;
    std::uint64_t corrupt_rebuilds = 0;
};

struct EmitConfig {
    std::string compiler;                 // empty: $ASPCOMP_CXX or "c++"
    std::vector<std::string> extra_flags; // appended to the compile command
};

class BuildError : public AspError {
public:
    BuildError(const std::string& msg, std::string log);
    const std::string& log() const { return log_; }

private:
    std::string log_;
};

// Opaque lambda^eval handle: both backends expose the same evaluation call.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual EvalOutcome evaluate(const Interpretation& m, const std::set<std::string>& pi_prime_predicates,
                                 const EvalOptions& opts = {}) = 0;
    virtual const std::string& digest() const = 0;
    virtual Backend backend() const = 0;
};

using EvaluatorHandle = std::shared_ptr<Evaluator>;

// Builds lambda^eval, keyed by program_hash under cache_dir:
//   <cache_dir>/<digest>/plan.bin   serialized plan (versioned)
//   <cache_dir>/<digest>/meta.json  canonical lambda, backend, build log name
//   <cache_dir>/<digest>/eval.src   emitted source        (emit backend)
//   <cache_dir>/<digest>/eval.so    built shared object   (emit backend)
//   <cache_dir>/<digest>/build.log  compiler output       (emit backend)
// A cache hit performs no rebuild; corrupted entries are rebuilt with a
// warning on stderr. An empty cache_dir builds in memory without caching.
EvaluatorHandle cache_get_or_build(const Program& lambda_r, const Program& lambda_c, Backend backend,
                                   const std::filesystem::path& cache_dir, CacheStats* stats = nullptr,
                                   const EmitConfig& emit_config = {});

} // namespace aspcomp
