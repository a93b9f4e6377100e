#include "glw/workspace.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "glw/kernels.hpp"
#include "glw/rng.hpp"

namespace glw {

const char* to_string(Phase p) {
    switch (p) {
        case Phase::Select: return "select";
        case Phase::Inject: return "inject";
        case Phase::Broadcast: return "broadcast";
        case Phase::Reverberate: return "reverberate";
        case Phase::Readout: return "readout";
    }
    return "?";
}

Json TraceEvent::to_json() const {
    Json j;
    j["step"] = step;
    j["phase"] = to_string(phase);
    if (!module.empty()) j["module"] = module;
    if (!scores.empty()) {
        Json s;
        for (const auto& [k, v] : scores) s[k] = v;
        j["scores"] = std::move(s);
    }
    if (amplitude) j["amplitude"] = *amplitude;
    if (dz_norm) j["dz_norm"] = *dz_norm;
    if (connected) j["connected"] = *connected;
    if (!note.empty()) j["note"] = note;
    return j;
}

Workspace::Workspace(const GlwTranslator* translator, AttentionParams att, IgnitionParams ign)
    : tr_(translator), att_(att), ign_(ign) {
    if (!tr_) throw ConfigError("Workspace requires a translator");
    if (att_.d_k < 1) throw ConfigError("attention d_k must be >= 1");
    if (!(att_.s_master > 0.0 && att_.s_master <= 1.0)) {
        throw ConfigError("s_master must be in (0, 1]");
    }
    if (!(ign_.lambda > 0.0 && ign_.lambda <= 1.0)) {
        throw ConfigError("ignition lambda must be in (0, 1]");
    }
    if (ign_.t_max < 1 || !(ign_.tol > 0.0)) {
        throw ConfigError("ignition needs t_max >= 1 and tol > 0");
    }
    const std::size_t n = tr_->module_count();
    const std::size_t d = tr_->workspace_dim();
    st_.z = Tensor::zeros({d});
    st_.query = Tensor::zeros({att_.d_k});
    st_.rng_seed = att_.proj_seed;
    st_.copies.resize(n);
    st_.copy_step.assign(n, -1);
    st_.connected.assign(n, false);
    keys_.resize(n);
    has_key_.assign(n, false);
    salience_.assign(n, 0.0);
    key_proj_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        st_.copies[i] = Tensor::zeros({tr_->module_dim(i)});
        // Fixed seeded projection per module, scaled like a dot-product head.
        Rng rng(Rng::derive(att_.proj_seed, 0x9E + i));
        key_proj_[i] = Tensor::zeros({att_.d_k, d});
        const double s = 1.0 / std::sqrt(static_cast<double>(d));
        for (auto& v : key_proj_[i].data) v = s * rng.normal();
        keys_[i] = Tensor::zeros({att_.d_k});
    }
}

void Workspace::push_trace(TraceEvent ev) { trace_.push_back(std::move(ev)); }

Tensor Workspace::row_matrix(const Tensor& v) const {
    Tensor m;
    m.shape = {1, v.size()};
    m.data = v.data;
    return m;
}

void Workspace::set_query(const Tensor& q) {
    if (q.size() != att_.d_k) {
        throw ShapeError("query has " + std::to_string(q.size()) + " entries, d_k=" +
                         std::to_string(att_.d_k));
    }
    st_.query = q;
    st_.query.shape = {att_.d_k};
}

Tensor Workspace::compute_key(std::size_t i, const Tensor& v) const {
    const Tensor z = tr_->encode(i, row_matrix(v));  // [1 x D]
    Tensor key = Tensor::zeros({att_.d_k});
    for (std::size_t r = 0; r < att_.d_k; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < tr_->workspace_dim(); ++c) {
            acc += key_proj_[i].at(r, c) * z.data[c];
        }
        key.data[r] = acc;
    }
    return key;
}

void Workspace::set_key(std::size_t i, const Tensor& key, double salience) {
    if (key.size() != att_.d_k) throw ShapeError("key dimension mismatch");
    keys_.at(i) = key;
    keys_[i].shape = {att_.d_k};
    has_key_.at(i) = true;
    salience_.at(i) = salience;
}

void Workspace::set_key_projection(std::size_t i, Tensor p) {
    if (p.rank() != 2 || p.rows() != att_.d_k || p.cols() != tr_->workspace_dim()) {
        throw ShapeError("key projection must be d_k x D");
    }
    key_proj_.at(i) = std::move(p);
}

std::vector<std::size_t> Workspace::attention_select() {
    const std::size_t n = tr_->module_count();
    TraceEvent ev;
    ev.step = st_.step_count;
    ev.phase = Phase::Select;

    struct Cand {
        std::size_t idx;
        double score;
    };
    std::vector<std::size_t> masters;
    std::vector<Cand> scored;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(att_.d_k));
    for (std::size_t i = 0; i < n; ++i) {
        const bool master = salience_[i] >= att_.s_master;
        if (!has_key_[i] && !master) continue;
        double score = 0.0;
        if (has_key_[i]) {
            for (std::size_t r = 0; r < att_.d_k; ++r) {
                score += keys_[i].data[r] * st_.query.data[r];
            }
            score *= inv_sqrt_dk;
            ev.scores[tr_->module_id(i)] = score;
        }
        if (master) {
            masters.push_back(i);
        } else if (score >= att_.theta_conn) {
            scored.push_back({i, score});
        }
    }

    // Master keys connect unconditionally and supersede capacity; remaining
    // slots are filled by descending score, ties toward the lower module id.
    std::vector<std::size_t> selected = masters;
    if (masters.size() < att_.c_max) {
        std::stable_sort(scored.begin(), scored.end(), [](const Cand& a, const Cand& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.idx < b.idx;
        });
        const std::size_t slots = att_.c_max - masters.size();
        for (std::size_t s = 0; s < scored.size() && s < slots; ++s) {
            selected.push_back(scored[s].idx);
        }
    }
    std::sort(selected.begin(), selected.end());

    std::fill(st_.connected.begin(), st_.connected.end(), false);
    std::vector<std::string> names;
    for (std::size_t i : selected) {
        st_.connected[i] = true;
        names.push_back(tr_->module_id(i));
    }
    ev.connected = names;
    push_trace(std::move(ev));
    return selected;
}

void Workspace::inject(std::size_t i, const Tensor& v) {
    if (v.size() != tr_->module_dim(i)) {
        throw ShapeError("inject into '" + tr_->module_id(i) + "': got " +
                         std::to_string(v.size()) + " entries, want " +
                         std::to_string(tr_->module_dim(i)));
    }
    TraceEvent ev;
    ev.step = st_.step_count;
    ev.phase = Phase::Inject;
    ev.module = tr_->module_id(i);
    if (!st_.connected[i]) {
        // Stimulus in a disconnected module does not reach the workspace; it
        // is only visible to the attention system (via its key/salience).
        ev.note = "disconnected-noop";
        push_trace(std::move(ev));
        return;
    }
    st_.copies[i] = v;
    st_.copies[i].shape = {v.size()};
    st_.copy_step[i] = st_.step_count;
    push_trace(std::move(ev));
}

void Workspace::broadcast() {
    const std::size_t n = tr_->module_count();
    const std::size_t d = tr_->workspace_dim();
    TraceEvent ev;
    ev.step = st_.step_count;
    ev.phase = Phase::Broadcast;

    std::vector<std::size_t> conn;
    for (std::size_t i = 0; i < n; ++i) {
        if (st_.connected[i]) conn.push_back(i);
    }
    if (conn.empty()) {
        ev.note = "no-connected-modules";
        push_trace(std::move(ev));
        return;
    }

    // Fuse connected encodings; the sum runs in fixed module order, so any
    // parallel evaluation of the encodings is bit-identical to sequential.
    std::vector<Tensor> encoded(conn.size());
    auto encode_one = [&](std::size_t c) {
        encoded[c] = tr_->encode(conn[c], row_matrix(st_.copies[conn[c]]));
    };
    const std::size_t workers = std::min(worker_threads(), conn.size());
    if (workers <= 1) {
        for (std::size_t c = 0; c < conn.size(); ++c) encode_one(c);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                for (std::size_t c = w; c < conn.size(); c += workers) encode_one(c);
            });
        }
        for (auto& th : pool) th.join();
    }
    Tensor z_new = Tensor::zeros({d});
    for (std::size_t c = 0; c < conn.size(); ++c) {
        kern::active().add(z_new.data.data(), z_new.data.data(), encoded[c].data.data(), d);
    }
    kern::active().scale(z_new.data.data(), z_new.data.data(),
                         1.0 / static_cast<double>(conn.size()), d);

    double dz = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
        const double diff = z_new.data[a] - st_.z.data[a];
        dz += diff * diff;
    }
    ev.dz_norm = std::sqrt(dz);
    st_.z = z_new;

    // Every registered copy receives the broadcast, connected or not; the
    // disconnected ones form the penumbra (content present, readout withheld).
    const Tensor z_row = row_matrix(st_.z);
    std::vector<Tensor> decoded(n);
    auto decode_one = [&](std::size_t j) { decoded[j] = tr_->decode(j, z_row); };
    if (workers <= 1 || n <= 1) {
        for (std::size_t j = 0; j < n; ++j) decode_one(j);
    } else {
        std::vector<std::thread> pool;
        const std::size_t wn = std::min(worker_threads(), n);
        for (std::size_t w = 0; w < wn; ++w) {
            pool.emplace_back([&, w]() {
                for (std::size_t j = w; j < n; j += wn) decode_one(j);
            });
        }
        for (auto& th : pool) th.join();
    }
    for (std::size_t j = 0; j < n; ++j) {
        st_.copies[j] = decoded[j];
        st_.copies[j].shape = {tr_->module_dim(j)};
        st_.copy_step[j] = st_.step_count;
    }
    st_.broadcast_done = true;
    push_trace(std::move(ev));
}

IgnitionTrace Workspace::reverberate(double u) {
    if (!st_.broadcast_done) {
        throw GlwError("reverberate requires at least one prior broadcast");
    }
    const std::size_t d = tr_->workspace_dim();
    std::vector<std::size_t> conn;
    for (std::size_t i = 0; i < tr_->module_count(); ++i) {
        if (st_.connected[i]) conn.push_back(i);
    }

    IgnitionTrace out;
    for (std::size_t t = 1; t <= ign_.t_max; ++t) {
        Tensor z_new = st_.z;
        if (!conn.empty()) {
            // Consensus step: each connected module round-trips the current
            // content through its own latent space.
            Tensor mean = Tensor::zeros({d});
            const Tensor z_row = row_matrix(st_.z);
            for (std::size_t c = 0; c < conn.size(); ++c) {
                const Tensor rt = tr_->encode(conn[c], tr_->decode(conn[c], z_row));
                kern::active().add(mean.data.data(), mean.data.data(), rt.data.data(), d);
            }
            kern::active().scale(mean.data.data(), mean.data.data(),
                                 1.0 / static_cast<double>(conn.size()), d);
            for (std::size_t a = 0; a < d; ++a) {
                z_new.data[a] = (1.0 - ign_.lambda) * st_.z.data[a] + ign_.lambda * mean.data[a];
            }
        }
        const double pre = ign_.gain * st_.amplitude + ign_.drive * u - ign_.theta_a;
        const double a_new = 1.0 / (1.0 + std::exp(-pre));

        double dz = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            const double diff = z_new.data[a] - st_.z.data[a];
            dz += diff * diff;
        }
        dz = std::sqrt(dz);
        const double da = std::abs(a_new - st_.amplitude);
        if (!kern::all_finite(z_new.data.data(), d) || !std::isfinite(a_new)) {
            TraceEvent ev;
            ev.step = st_.step_count;
            ev.phase = Phase::Reverberate;
            ev.note = "non-finite-state";
            push_trace(std::move(ev));
            throw NumericsError("reverberate produced non-finite state at iteration " +
                                std::to_string(t));
        }
        st_.z = std::move(z_new);
        st_.amplitude = a_new;
        out.dz_norms.push_back(dz);
        out.amplitudes.push_back(a_new);
        out.steps = t;

        TraceEvent ev;
        ev.step = st_.step_count;
        ev.phase = Phase::Reverberate;
        ev.dz_norm = dz;
        ev.amplitude = a_new;
        push_trace(std::move(ev));

        if (dz < ign_.tol && da < ign_.tol) break;
    }
    out.final_amplitude = st_.amplitude;
    out.ignited = st_.amplitude >= 0.5;
    return out;
}

TickSummary Workspace::tick(const std::vector<WorkspaceEvent>& events,
                            const std::optional<Tensor>& query) {
    st_.step_count += 1;
    if (query) set_query(*query);

    // Step 0: keys from event latents, then the attention gate.
    for (const auto& e : events) {
        const std::size_t i = tr_->module_index(e.module);
        set_key(i, compute_key(i, e.stimulus), e.salience);
    }
    attention_select();

    TickSummary sum;
    sum.step = st_.step_count;
    for (bool c : st_.connected) sum.n_connected += c;

    // Step 1: injection, broadcast, reverberation.
    for (const auto& e : events) {
        inject(tr_->module_index(e.module), e.stimulus);
    }
    if (sum.n_connected > 0) {
        broadcast();
        double u = 0.0;
        for (const auto& e : events) u = std::max(u, e.u);
        const IgnitionTrace rev = reverberate(u);
        sum.dz_norm = rev.dz_norms.empty() ? 0.0 : rev.dz_norms.back();
    } else {
        TraceEvent ev;
        ev.step = st_.step_count;
        ev.phase = Phase::Broadcast;
        ev.note = "skipped-no-connected-modules";
        push_trace(std::move(ev));
    }
    sum.amplitude = st_.amplitude;
    sum.ignited = st_.amplitude >= 0.5;
    summaries_.push_back(sum);
    return sum;
}

Tensor Workspace::readout(std::size_t i, const SpecializedModule* module,
                          Tensor* decoded_obs) const {
    if (i >= tr_->module_count()) throw LookupError("readout: module index out of range");
    if (!st_.connected[i]) {
        throw WithheldError("readout withheld: module '" + tr_->module_id(i) +
                            "' is disconnected (content only reaches its internal copy)");
    }
    if (module && decoded_obs) {
        *decoded_obs = module->decode(row_matrix(st_.copies[i]));
    }
    return st_.copies[i];
}

std::string Workspace::trace_json_lines() const {
    std::string out;
    for (const auto& ev : trace_) {
        out += dump_json(ev.to_json(), -1);  // one compact object per line
    }
    return out;
}

std::vector<std::string> Workspace::summary_csv_header() {
    return {"step", "n_connected", "amplitude", "dz_norm", "ignited"};
}

Tensor Workspace::summary_rows() const {
    Tensor t = Tensor::zeros({summaries_.size(), 5});
    for (std::size_t i = 0; i < summaries_.size(); ++i) {
        double* r = t.row_ptr(i);
        r[0] = summaries_[i].step;
        r[1] = static_cast<double>(summaries_[i].n_connected);
        r[2] = summaries_[i].amplitude;
        r[3] = summaries_[i].dz_norm;
        r[4] = summaries_[i].ignited ? 1.0 : 0.0;
    }
    return t;
}

}  // namespace glw
