#include "sbo/sbo.h"

#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include "sbo/errors.hpp"
#include "sbo/misf_phase.hpp"
#include "sbo/mott_spin.hpp"
#include "sbo/site_basis.hpp"
#include "sbo/sweep.hpp"

struct sbo_config {
    sbo::RunConfig config;
};

struct sbo_result {
    sbo::RunResult result;
    std::string csv;
};

struct sbo_basis {
    sbo::SiteBasis basis;
};

namespace {

thread_local std::string last_error;

sbo_status fail(sbo_status s, const std::string& msg) {
    last_error = msg;
    return s;
}

// Runs f, mapping exceptions to status codes.
template <class F>
sbo_status guarded(F&& f) {
    try {
        f();
        last_error.clear();
        return SBO_OK;
    } catch (const sbo::ConfigError& e) {
        return fail(SBO_ERR_CONFIG, e.what());
    } catch (const sbo::DomainError& e) {
        return fail(SBO_ERR_DOMAIN, e.what());
    } catch (const sbo::ConvergenceError& e) {
        return fail(SBO_ERR_CONVERGENCE, e.what());
    } catch (const sbo::InstabilityError& e) {
        return fail(SBO_ERR_INSTABILITY, e.what());
    } catch (const sbo::NoTransition& e) {
        return fail(SBO_ERR_NO_TRANSITION, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(SBO_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(SBO_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(SBO_ERR_INTERNAL, "unknown error");
    }
}

char* dup_string(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

#define SBO_REQUIRE(ptr)                                                                           \
    do {                                                                                           \
        if (!(ptr)) return fail(SBO_ERR_INVALID_ARGUMENT, #ptr " is null");                       \
    } while (0)

} // namespace

extern "C" {

const char* sbo_version(void) { return SBO_VERSION; }

const char* sbo_status_string(sbo_status status) {
    switch (status) {
    case SBO_OK: return "ok";
    case SBO_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SBO_ERR_DOMAIN: return "domain error";
    case SBO_ERR_CONFIG: return "config error";
    case SBO_ERR_CONVERGENCE: return "no convergence";
    case SBO_ERR_INSTABILITY: return "instability";
    case SBO_ERR_NO_TRANSITION: return "no transition";
    case SBO_ERR_IO: return "i/o error";
    case SBO_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* sbo_last_error(void) { return last_error.c_str(); }

void sbo_string_free(char* s) { std::free(s); }

sbo_status sbo_config_load(const char* path, sbo_config** out) {
    SBO_REQUIRE(path);
    SBO_REQUIRE(out);
    *out = nullptr;
    return guarded([&] {
        if (!std::filesystem::exists(path)) throw std::filesystem::filesystem_error(
            "config not found", path, std::make_error_code(std::errc::no_such_file_or_directory));
        *out = new sbo_config{sbo::load_config(path)};
    });
}

sbo_status sbo_config_parse(const char* text, sbo_config** out) {
    SBO_REQUIRE(text);
    SBO_REQUIRE(out);
    *out = nullptr;
    return guarded([&] { *out = new sbo_config{sbo::parse_config(text)}; });
}

sbo_status sbo_config_set_method(sbo_config* config, const char* method) {
    SBO_REQUIRE(config);
    SBO_REQUIRE(method);
    return guarded([&] { config->config.method = sbo::parse_method(method); });
}

sbo_status sbo_config_set_workers(sbo_config* config, int workers) {
    SBO_REQUIRE(config);
    if (workers < 0) return fail(SBO_ERR_INVALID_ARGUMENT, "workers must be >= 0");
    config->config.workers = workers;
    last_error.clear();
    return SBO_OK;
}

sbo_status sbo_config_set_seed(sbo_config* config, uint64_t seed) {
    SBO_REQUIRE(config);
    config->config.seed = seed;
    last_error.clear();
    return SBO_OK;
}

sbo_status sbo_config_validate(const sbo_config* config) {
    SBO_REQUIRE(config);
    return guarded([&] { config->config.validate(); });
}

sbo_status sbo_config_to_json(const sbo_config* config, char** out) {
    SBO_REQUIRE(config);
    SBO_REQUIRE(out);
    *out = nullptr;
    return guarded([&] { *out = dup_string(sbo::config_to_json(config->config)); });
}

void sbo_config_free(sbo_config* config) { delete config; }

sbo_status sbo_run(const sbo_config* config, sbo_result** out) {
    SBO_REQUIRE(config);
    SBO_REQUIRE(out);
    *out = nullptr;
    return guarded([&] {
        auto* r = new sbo_result{sbo::execute(config->config), {}};
        r->csv = r->result.table.to_csv();
        *out = r;
    });
}

sbo_status sbo_result_write(const sbo_config* config, const sbo_result* result, const char* dir) {
    SBO_REQUIRE(config);
    SBO_REQUIRE(result);
    SBO_REQUIRE(dir);
    return guarded([&] {
        try {
            sbo::write_outputs(config->config, result->result, dir);
        } catch (const sbo::Error& e) {
            throw std::filesystem::filesystem_error(e.what(), std::make_error_code(std::errc::io_error));
        }
    });
}

const char* sbo_result_csv(const sbo_result* result) { return result ? result->csv.c_str() : ""; }
const char* sbo_result_metadata(const sbo_result* result) { return result ? result->result.metadata.c_str() : ""; }
const char* sbo_result_plot(const sbo_result* result) { return result ? result->result.plot.c_str() : ""; }
size_t sbo_result_rows(const sbo_result* result) { return result ? result->result.table.rows.size() : 0; }
int sbo_result_failures(const sbo_result* result) { return result ? result->result.failures : 0; }
void sbo_result_free(sbo_result* result) { delete result; }

sbo_status sbo_basis_create(int n_max, sbo_basis** out) {
    SBO_REQUIRE(out);
    *out = nullptr;
    return guarded([&] { *out = new sbo_basis{sbo::SiteBasis(n_max)}; });
}

size_t sbo_basis_size(const sbo_basis* basis) { return basis ? basis->basis.size() : 0; }

sbo_status sbo_basis_element(const sbo_basis* basis, int sigma, int S, int m, int n, int Sp, int mp, int np,
                             double* out) {
    SBO_REQUIRE(basis);
    SBO_REQUIRE(out);
    if (sigma < -1 || sigma > 1) return fail(SBO_ERR_INVALID_ARGUMENT, "sigma must be -1, 0 or +1");
    return guarded([&] {
        const auto& b = basis->basis;
        *out = b.c(sigma, b.index({S, m, n}), b.index({Sp, mp, np}));
    });
}

sbo_status sbo_basis_dump(const sbo_basis* basis, char** out) {
    SBO_REQUIRE(basis);
    SBO_REQUIRE(out);
    *out = nullptr;
    return guarded([&] {
        std::ostringstream os;
        basis->basis.dump(os);
        *out = dup_string(os.str());
    });
}

void sbo_basis_free(sbo_basis* basis) { delete basis; }

sbo_status sbo_lobe_at(double U0, double U2, double mu, int* out) {
    SBO_REQUIRE(out);
    return guarded([&] {
        sbo::ModelParams p;
        p.U0 = U0;
        p.U2 = U2;
        p.mu = mu;
        p.validate();
        *out = sbo::lobe_at(p);
    });
}

sbo_status sbo_misf_boundary(double U0, double U2, double mu, int dim, double* out) {
    SBO_REQUIRE(out);
    return guarded([&] {
        sbo::ModelParams p;
        p.U0 = U0;
        p.U2 = U2;
        p.mu = mu;
        p.dim = dim;
        p.validate();
        const int n = sbo::lobe_at(p);
        if (n == 0) throw sbo::DomainError("mu lies outside every Mott lobe");
        *out = sbo::boundary_analytic(n, mu, p);
    });
}

sbo_status sbo_qc_frozen(double J1, double J2, int z, double* out) {
    SBO_REQUIRE(out);
    return guarded([&] {
        if (z <= 0) throw sbo::DomainError("z must be positive");
        if (!(J1 > J2)) throw sbo::DomainError("q_c needs J1 > J2");
        *out = 2.0 * z * (J1 - J2);
    });
}

sbo_status sbo_n2_singlet_boundary(double U0, double U2, double lambda, int z, double* out) {
    SBO_REQUIRE(out);
    return guarded([&] { *out = sbo::t_c_n2_singlet(U0, U2, lambda, z); });
}

} // extern "C"
