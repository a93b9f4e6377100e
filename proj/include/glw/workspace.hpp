#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "glw/jsonio.hpp"
#include "glw/modules.hpp"
#include "glw/translator.hpp"

namespace glw {

struct AttentionParams {
    double theta_conn = 0.0;  // connection score threshold
    std::size_t c_max = 2;    // capacity (master keys supersede it)
    double s_master = 0.9;    // salience level acting as a master key
    std::size_t d_k = 8;      // key/query dimension
    std::uint64_t proj_seed = 0;
};

struct IgnitionParams {
    double lambda = 0.5;   // content step size in (0, 1]
    double gain = 8.0;     // amplitude self-gain g
    double drive = 4.0;    // input drive beta
    double theta_a = 6.0;  // amplitude threshold
    std::size_t t_max = 400;
    double tol = 1e-9;
};

enum class Phase { Select, Inject, Broadcast, Reverberate, Readout };
const char* to_string(Phase p);

struct TraceEvent {
    int step = 0;
    Phase phase = Phase::Select;
    std::string module;  // empty when not module-scoped
    std::map<std::string, double> scores;
    std::optional<double> amplitude;
    std::optional<double> dz_norm;
    std::optional<std::vector<std::string>> connected;
    std::string note;

    Json to_json() const;
};

struct WorkspaceState {
    Tensor z;                    // [D]
    std::vector<Tensor> copies;  // internal copy per module, [d_i]
    std::vector<int> copy_step;  // step at which each copy was last written
    std::vector<bool> connected;
    double amplitude = 0.0;
    Tensor query;  // [d_k]
    int step_count = 0;
    std::uint64_t rng_seed = 0;
    bool broadcast_done = false;
};

struct IgnitionTrace {
    std::vector<double> dz_norms;
    std::vector<double> amplitudes;
    std::size_t steps = 0;
    bool ignited = false;
    double final_amplitude = 0.0;
};

struct WorkspaceEvent {
    std::string module;
    Tensor stimulus;  // [d_i]
    double salience = 0.0;
    double u = 0.0;  // input strength for the ignition gate
};

struct TickSummary {
    int step = 0;
    std::size_t n_connected = 0;
    double amplitude = 0.0;
    double dz_norm = 0.0;
    bool ignited = false;
};

// Operational state machine: attention-gated connection, injection into
// internal copies, broadcast through the shared space, and recurrent
// reverberation with a bistable amplitude gate. Strictly single-threaded per
// instance; copyable so a state snapshot can be replayed elsewhere.
class Workspace {
public:
    Workspace(const GlwTranslator* translator, AttentionParams att, IgnitionParams ign);

    const WorkspaceState& state() const { return st_; }
    WorkspaceState& state() { return st_; }
    const GlwTranslator& translator() const { return *tr_; }
    const AttentionParams& attention_params() const { return att_; }

    void set_query(const Tensor& q);

    // key = P_i * encode_to_glw(v_i); P_i is a fixed seeded d_k x D projection.
    Tensor compute_key(std::size_t i, const Tensor& v) const;
    void set_key(std::size_t i, const Tensor& key, double salience);
    void set_key_projection(std::size_t i, Tensor p);  // test hook
    bool has_key(std::size_t i) const { return has_key_.at(i); }

    // Applies the key/query gate and updates connection flags.
    std::vector<std::size_t> attention_select();

    // Copies the stimulus into the module's internal copy when connected;
    // no-op (with trace) otherwise.
    void inject(std::size_t i, const Tensor& v);

    // z <- mean of connected encodings, then every registered copy receives
    // decode(z) whether or not its module is connected (the penumbra).
    void broadcast();

    IgnitionTrace reverberate(double u);

    // One trace-scoped transaction: select -> inject -> broadcast ->
    // reverberate; composition of the public sub-ops above.
    TickSummary tick(const std::vector<WorkspaceEvent>& events,
                     const std::optional<Tensor>& query = std::nullopt);

    // Returns the internal copy (and the decoded observation when the
    // specialized module is supplied); disconnected modules are withheld.
    Tensor readout(std::size_t i, const SpecializedModule* module = nullptr,
                   Tensor* decoded_obs = nullptr) const;

    const std::vector<TraceEvent>& trace() const { return trace_; }
    const std::vector<TickSummary>& summaries() const { return summaries_; }
    std::string trace_json_lines() const;
    static std::vector<std::string> summary_csv_header();
    Tensor summary_rows() const;  // numeric matrix matching the header

private:
    void push_trace(TraceEvent ev);
    Tensor row_matrix(const Tensor& v) const;

    const GlwTranslator* tr_;
    AttentionParams att_;
    IgnitionParams ign_;
    WorkspaceState st_;
    std::vector<Tensor> key_proj_;  // per module, d_k x D
    std::vector<Tensor> keys_;      // per module, [d_k]
    std::vector<bool> has_key_;
    std::vector<double> salience_;
    std::vector<TraceEvent> trace_;
    std::vector<TickSummary> summaries_;
};

}  // namespace glw
