#include "aspcomp/cache.hpp"

#include "aspcomp/emit.hpp"
#include "aspcomp/plan.hpp"

#include <openssl/evp.h>

#include <dlfcn.h>
#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace aspcomp {

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string program_hash(const Program& lambda_r, const Program& lambda_c) {
    return sha256_hex(canonical_text(lambda_r) + canonical_text(lambda_c));
}

BuildError::BuildError(const std::string& msg, std::string log)
    : AspError(msg + (log.empty() ? "" : "\n" + log)), log_(std::move(log)) {}

namespace {

namespace fs = std::filesystem;

// Advisory lock held around build-and-store; concurrent builders converge to
// identical artifacts, the lock just avoids torn writes.
class FileLock {
public:
    explicit FileLock(const fs::path& p) {
        fd_ = ::open(p.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ >= 0) ::flock(fd_, LOCK_EX);
    }
    ~FileLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }

private:
    int fd_ = -1;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw AspError("cannot write " + p.string());
}

class PlanEvaluator : public Evaluator {
public:
    explicit PlanEvaluator(EvaluationPlan plan) : plan_(std::move(plan)) {}

    EvalOutcome evaluate(const Interpretation& m, const std::set<std::string>& pi_prime_predicates,
                         const EvalOptions& opts) override {
        return execute_plan(plan_, m, pi_prime_predicates, opts);
    }
    const std::string& digest() const override { return plan_.digest; }
    Backend backend() const override { return Backend::interp; }
    const EvaluationPlan& plan() const { return plan_; }

private:
    EvaluationPlan plan_;
};

class EmittedEvaluator : public Evaluator {
public:
    EmittedEvaluator(const fs::path& so_path, std::string digest) : digest_(std::move(digest)) {
        handle_ = ::dlopen(so_path.c_str(), RTLD_NOW | RTLD_LOCAL);
        if (!handle_) throw BuildError("dlopen failed for " + so_path.string(), ::dlerror());
        eval_fn_ = reinterpret_cast<const char* (*)(const char*)>(::dlsym(handle_, "aspc_evaluate"));
        digest_fn_ = reinterpret_cast<const char* (*)()>(::dlsym(handle_, "aspc_digest"));
        if (!eval_fn_ || !digest_fn_) {
            ::dlclose(handle_);
            handle_ = nullptr;
            throw BuildError("emitted object misses its entry points", so_path.string());
        }
        if (digest_ != digest_fn_()) {
            ::dlclose(handle_);
            handle_ = nullptr;
            throw BuildError("emitted object digest mismatch", so_path.string());
        }
    }
    ~EmittedEvaluator() override {
        if (handle_) ::dlclose(handle_);
    }

    EvalOutcome evaluate(const Interpretation& m, const std::set<std::string>& pi_prime_predicates,
                         const EvalOptions& opts) override {
        std::string input;
        for (const std::string& p : pi_prime_predicates) {
            if (!input.empty()) input += " ";
            input += p;
        }
        input += "\n";
        bool first = true;
        for (const Term& t : opts.universe_constants) {
            if (!first) input += " ";
            first = false;
            input += to_string(t);
        }
        input += "\n" + std::to_string(opts.trace_budget) + "\n";
        input += to_string(m);
        input += "\n";

        const char* raw = eval_fn_(input.c_str());
        EvalOutcome out;
        std::istringstream lines(raw ? raw : "");
        std::string line;
        while (std::getline(lines, line)) {
            if (line.rfind("ext:", 0) == 0) {
                std::istringstream toks(line.substr(4));
                std::string tok;
                while (toks >> tok) out.m_ext.insert(parse_ground_atom(tok));
            } else if (line.rfind("c: ", 0) == 0) {
                std::string payload = line.substr(3);
                if (payload == ":-.") {
                    out.constraints.insert(GroundConstraint{});
                } else {
                    Program p = parse_program(payload);
                    if (p.rules().size() != 1 || !p.rules()[0].is_constraint())
                        throw AspError("emitted evaluator produced a malformed constraint line: " + line);
                    out.constraints.insert(GroundConstraint::canonical(p.rules()[0].body));
                }
            } else if (line.rfind("stats:", 0) == 0) {
                std::istringstream toks(line.substr(6));
                std::string tok;
                while (toks >> tok) {
                    auto eq = tok.find('=');
                    if (eq == std::string::npos) continue;
                    std::uint64_t v = std::strtoull(tok.substr(eq + 1).c_str(), nullptr, 10);
                    if (tok.rfind("ground_instances", 0) == 0) out.stats.ground_instances = v;
                    if (tok.rfind("fallbacks", 0) == 0) out.stats.trace_fallbacks = v;
                }
            }
        }
        out.stats.constraint_traces = out.stats.ground_instances;
        return out;
    }
    const std::string& digest() const override { return digest_; }
    Backend backend() const override { return Backend::emit; }

private:
    void* handle_ = nullptr;
    const char* (*eval_fn_)(const char*) = nullptr;
    const char* (*digest_fn_)() = nullptr;
    std::string digest_;
};

std::string compiler_command(const EmitConfig& cfg) {
    if (!cfg.compiler.empty()) return cfg.compiler;
    if (const char* env = std::getenv("ASPCOMP_CXX")) return env;
    return "c++";
}

void build_shared_object(const fs::path& src, const fs::path& so, const fs::path& log, const EmitConfig& cfg) {
    std::string cmd = compiler_command(cfg) + " -std=c++17 -O2 -shared -fPIC";
    for (const std::string& f : cfg.extra_flags) cmd += " " + f;
    cmd += " -o '" + so.string() + "' -x c++ '" + src.string() + "' > '" + log.string() + "' 2>&1";
    int rc = std::system(cmd.c_str());
    if (rc != 0) throw BuildError("compiling the emitted evaluator failed (command: " + cmd + ")", read_file(log));
}

EvaluatorHandle build_handle(const EvaluationPlan& plan, Backend backend, const fs::path& dir,
                             const EmitConfig& emit_config) {
    if (backend == Backend::interp) return std::make_shared<PlanEvaluator>(plan);
    SourceArtifact artifact = emit_source(plan);
    fs::path src = dir / "eval.src";
    fs::path so = dir / "eval.so";
    fs::path log = dir / "build.log";
    write_file(src, artifact.source);
    build_shared_object(src, so, log, emit_config);
    return std::make_shared<EmittedEvaluator>(so, plan.digest);
}

} // namespace

EvaluatorHandle cache_get_or_build(const Program& lambda_r, const Program& lambda_c, Backend backend,
                                   const fs::path& cache_dir, CacheStats* stats, const EmitConfig& emit_config) {
    CacheStats local;
    CacheStats& s = stats ? *stats : local;

    if (cache_dir.empty()) {
        // In-memory build, no cache.
        EvaluationPlan plan = specialize(lambda_r, lambda_c);
        ++s.misses;
        ++s.builds;
        if (backend == Backend::interp) return std::make_shared<PlanEvaluator>(std::move(plan));
        fs::path tmp = fs::temp_directory_path() / ("aspcomp-" + plan.digest.substr(0, 16));
        fs::create_directories(tmp);
        return build_handle(plan, backend, tmp, emit_config);
    }

    std::string digest = program_hash(lambda_r, lambda_c);
    fs::path dir = cache_dir / digest;
    fs::create_directories(dir);
    FileLock lock(cache_dir / (digest + ".lock"));

    fs::path plan_path = dir / "plan.bin";
    fs::path meta_path = dir / "meta.json";
    fs::path so_path = dir / "eval.so";

    bool have_entry = fs::exists(plan_path) && fs::exists(meta_path);
    bool have_backend = backend == Backend::interp ? have_entry : (have_entry && fs::exists(so_path));

    if (have_backend) {
        auto plan = plan_deserialize(read_file(plan_path));
        if (plan && plan->digest == digest) {
            try {
                ++s.hits;
                if (backend == Backend::interp) return std::make_shared<PlanEvaluator>(std::move(*plan));
                return std::make_shared<EmittedEvaluator>(so_path, digest);
            } catch (const BuildError&) {
                --s.hits;
                ++s.corrupt_rebuilds;
                std::cerr << "aspcomp: cache entry " << digest << " is unusable, rebuilding\n";
            }
        } else {
            ++s.corrupt_rebuilds;
            std::cerr << "aspcomp: cache entry " << digest << " is corrupted, rebuilding\n";
        }
    } else {
        ++s.misses;
    }

    EvaluationPlan plan = specialize(lambda_r, lambda_c);
    write_file(plan_path, plan_serialize(plan));
    nlohmann::json meta;
    meta["digest"] = digest;
    meta["backend"] = backend == Backend::interp ? "interp" : "emit";
    meta["lambda"] = plan.canonical_lambda;
    meta["build_log"] = backend == Backend::emit ? "build.log" : "";
    meta["format_version"] = 1;
    write_file(meta_path, meta.dump(2) + "\n");
    ++s.builds;
    return build_handle(plan, backend, dir, emit_config);
}

} // namespace aspcomp
