#include "mop/toynet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mop {

namespace {

std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

// Forward pass for one sample, keeping per-layer inputs and pre-activations.
struct ForwardTrace {
    std::vector<std::vector<double>> inputs;   // input to each layer
    std::vector<std::vector<double>> preacts;  // W x + b per layer
};

ForwardTrace forward_trace(const ToyNet& net, const std::vector<double>& x) {
    ForwardTrace t;
    std::vector<double> cur = x;
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const Layer& layer = net.layers[l];
        t.inputs.push_back(cur);
        std::vector<double> pre(layer.w.rows);
        for (std::size_t k = 0; k < layer.w.rows; ++k) {
            const double* wk = layer.w.row_ptr(k);
            double s = layer.b[k];
            for (std::size_t c = 0; c < layer.w.cols; ++c) s += wk[c] * cur[c];
            pre[k] = s;
        }
        t.preacts.push_back(pre);
        if (l + 1 < net.depth()) {
            cur.resize(pre.size());
            for (std::size_t k = 0; k < pre.size(); ++k) cur[k] = std::max(0.0, pre[k]);
        }
    }
    return t;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

// Backward pass producing per-layer pre-activation deltas for one sample.
std::vector<std::vector<double>> backward_deltas(const ToyNet& net, const ForwardTrace& t,
                                                 int label) {
    const std::size_t depth = net.depth();
    std::vector<std::vector<double>> deltas(depth);
    std::vector<double> p = softmax(t.preacts.back());
    p[static_cast<std::size_t>(label)] -= 1.0;
    deltas[depth - 1] = std::move(p);
    for (std::size_t l = depth - 1; l-- > 0;) {
        const Layer& up = net.layers[l + 1];
        std::vector<double> d(net.layers[l].w.rows, 0.0);
        const std::vector<double>& du = deltas[l + 1];
        for (std::size_t k = 0; k < up.w.rows; ++k) {
            const double* wk = up.w.row_ptr(k);
            const double dk = du[k];
            for (std::size_t c = 0; c < up.w.cols; ++c) d[c] += wk[c] * dk;
        }
        const std::vector<double>& pre = t.preacts[l];
        for (std::size_t c = 0; c < d.size(); ++c)
            if (pre[c] <= 0.0) d[c] = 0.0;
        deltas[l] = std::move(d);
    }
    return deltas;
}

std::vector<double> column(const Mat& m, std::size_t j) {
    std::vector<double> v(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) v[i] = m(i, j);
    return v;
}

}  // namespace

ToyNet ToyNet::init(const std::vector<std::size_t>& widths, std::uint64_t seed) {
    if (widths.size() < 2) throw std::invalid_argument("net needs at least one layer");
    std::mt19937_64 rng(seed);
    ToyNet net;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t d_in = widths[l], d_out = widths[l + 1];
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(d_in)));
        Layer layer{Mat(d_out, d_in), std::vector<double>(d_out, 0.0)};
        for (double& v : layer.w.data) v = dist(rng);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

std::vector<double> ToyNet::forward(const std::vector<double>& x) const {
    return forward_trace(*this, x).preacts.back();
}

const std::vector<std::size_t>& Dataset::split(Split s) const {
    switch (s) {
        case Split::Train: return train_idx;
        case Split::Calibration: return cal_idx;
        default: return test_idx;
    }
}

Dataset generate_dataset(std::uint64_t seed, std::size_t n, std::size_t classes,
                         std::size_t dim) {
    if (classes < 2) throw std::invalid_argument("generate_dataset: classes must be >= 2");
    if (n < classes) throw std::invalid_argument("generate_dataset: n must be >= classes");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    // Class means: scaled axis vectors when they fit, otherwise random
    // directions pushed to the same radius. Radius 5 with unit noise keeps
    // the blobs well separated.
    const double radius = 5.0;
    Mat means(classes, dim);
    for (std::size_t c = 0; c < classes; ++c) {
        if (c < dim) {
            means(c, c) = radius;
        } else {
            double norm2 = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                means(c, j) = unit(rng);
                norm2 += means(c, j) * means(c, j);
            }
            const double scale = radius / std::sqrt(norm2);
            for (std::size_t j = 0; j < dim; ++j) means(c, j) *= scale;
        }
    }

    Dataset d;
    d.classes = classes;
    d.inputs = Mat(dim, n);
    d.labels.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t c = j % classes;  // balanced labels
        d.labels[j] = static_cast<int>(c);
        for (std::size_t i = 0; i < dim; ++i) d.inputs(i, j) = means(c, i) + unit(rng);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_train = round_half_up(0.70 * static_cast<double>(n));
    const std::size_t n_cal = round_half_up(0.15 * static_cast<double>(n));
    for (std::size_t r = 0; r < n; ++r) {
        if (r < n_train)
            d.train_idx.push_back(order[r]);
        else if (r < n_train + n_cal)
            d.cal_idx.push_back(order[r]);
        else
            d.test_idx.push_back(order[r]);
    }
    return d;
}

double sample_loss(const ToyNet& net, const std::vector<double>& x, int label) {
    const std::vector<double> logits = net.forward(x);
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    return std::log(z) + m - logits[static_cast<std::size_t>(label)];
}

ToyNet train(ToyNet net, const Dataset& data, std::size_t epochs, double lr,
             std::uint64_t seed, TrainReport* report) {
    (void)seed;
    if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    const auto& idx = data.train_idx;
    if (idx.empty()) throw std::invalid_argument("train: empty train split");
    const double momentum = 0.9;
    const double inv_n = 1.0 / static_cast<double>(idx.size());

    std::vector<Mat> vel_w;
    std::vector<std::vector<double>> vel_b;
    for (const Layer& l : net.layers) {
        vel_w.emplace_back(l.w.rows, l.w.cols);
        vel_b.emplace_back(l.b.size(), 0.0);
    }

    TrainReport rep;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        std::vector<Mat> grad_w;
        std::vector<std::vector<double>> grad_b;
        for (const Layer& l : net.layers) {
            grad_w.emplace_back(l.w.rows, l.w.cols);
            grad_b.emplace_back(l.b.size(), 0.0);
        }
        double loss = 0.0;
        for (std::size_t j : idx) {
            const std::vector<double> x = column(data.inputs, j);
            const ForwardTrace t = forward_trace(net, x);
            const auto deltas = backward_deltas(net, t, data.labels[j]);
            const std::vector<double>& logits = t.preacts.back();
            const double m = *std::max_element(logits.begin(), logits.end());
            double z = 0.0;
            for (double v : logits) z += std::exp(v - m);
            loss += std::log(z) + m - logits[static_cast<std::size_t>(data.labels[j])];
            for (std::size_t l = 0; l < net.depth(); ++l) {
                const std::vector<double>& in = t.inputs[l];
                const std::vector<double>& dl = deltas[l];
                Mat& gw = grad_w[l];
                for (std::size_t k = 0; k < gw.rows; ++k) {
                    const double dk = dl[k];
                    if (dk == 0.0) continue;
                    double* gk = gw.row_ptr(k);
                    for (std::size_t c = 0; c < gw.cols; ++c) gk[c] += dk * in[c];
                }
                for (std::size_t k = 0; k < grad_b[l].size(); ++k) grad_b[l][k] += dl[k];
            }
        }
        loss *= inv_n;
        if (!std::isfinite(loss)) throw TrainDivergence(epoch);

        double grad_sq = 0.0;
        for (std::size_t l = 0; l < net.depth(); ++l) {
            for (double& g : grad_w[l].data) {
                g *= inv_n;
                grad_sq += g * g;
            }
            for (double& g : grad_b[l]) {
                g *= inv_n;
                grad_sq += g * g;
            }
        }
        const double grad_norm = std::sqrt(grad_sq);
        if (epoch == 0) rep.initial_grad_norm = grad_norm;
        rep.final_grad_norm = grad_norm;
        rep.final_loss = loss;
        rep.epochs_run = epoch + 1;

        for (std::size_t l = 0; l < net.depth(); ++l) {
            for (std::size_t i = 0; i < grad_w[l].data.size(); ++i) {
                vel_w[l].data[i] = momentum * vel_w[l].data[i] - lr * grad_w[l].data[i];
                net.layers[l].w.data[i] += vel_w[l].data[i];
            }
            for (std::size_t i = 0; i < grad_b[l].size(); ++i) {
                vel_b[l][i] = momentum * vel_b[l][i] - lr * grad_b[l][i];
                net.layers[l].b[i] += vel_b[l][i];
            }
        }
    }
    if (report) *report = rep;
    return net;
}

Mat LayerCapture::fisher_factor(std::size_t k) const {
    Mat a(x.rows, x.cols);
    for (std::size_t j = 0; j < x.cols; ++j) {
        const double dk = deltas(k, j);
        for (std::size_t i = 0; i < x.rows; ++i) a(i, j) = dk * x(i, j);
    }
    return a;
}

CalibrationCapture capture(const ToyNet& net, const Dataset& data) {
    const auto& idx = data.cal_idx;
    if (idx.empty()) throw std::invalid_argument("capture: empty calibration split");
    CalibrationCapture cap;
    for (const Layer& l : net.layers)
        cap.layers.push_back(LayerCapture{Mat(l.w.cols, idx.size()), Mat(l.w.rows, idx.size())});
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const std::vector<double> x = column(data.inputs, idx[j]);
        const ForwardTrace t = forward_trace(net, x);
        const auto deltas = backward_deltas(net, t, data.labels[idx[j]]);
        for (std::size_t l = 0; l < net.depth(); ++l) {
            for (std::size_t i = 0; i < t.inputs[l].size(); ++i)
                cap.layers[l].x(i, j) = t.inputs[l][i];
            for (std::size_t k = 0; k < deltas[l].size(); ++k)
                cap.layers[l].deltas(k, j) = deltas[l][k];
        }
    }
    return cap;
}

CalibrationCapture recalibrate(const ToyNet& net, const Dataset& data) {
    return capture(net, data);
}

TensorFile net_to_tensors(const ToyNet& net) {
    TensorFile f;
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const std::string prefix = "layer" + std::to_string(l);
        f.put(prefix + ".W", net.layers[l].w);
        Mat b(1, net.layers[l].b.size());
        b.data = net.layers[l].b;
        f.put(prefix + ".b", std::move(b));
    }
    return f;
}

ToyNet net_from_tensors(const TensorFile& f) {
    ToyNet net;
    for (std::size_t l = 0;; ++l) {
        const std::string prefix = "layer" + std::to_string(l);
        if (!f.has(prefix + ".W")) break;
        Layer layer;
        layer.w = f.get(prefix + ".W");
        layer.b = f.get(prefix + ".b").data;
        net.layers.push_back(std::move(layer));
    }
    if (net.layers.empty()) throw std::runtime_error("checkpoint holds no layers");
    return net;
}

TensorFile dataset_to_tensors(const Dataset& d) {
    TensorFile f;
    f.put("inputs", d.inputs);
    Mat labels(1, d.labels.size());
    for (std::size_t i = 0; i < d.labels.size(); ++i) labels.data[i] = d.labels[i];
    f.put("labels", std::move(labels));
    Mat meta(1, 1);
    meta.data[0] = static_cast<double>(d.classes);
    f.put("classes", std::move(meta));
    auto put_idx = [&f](const std::string& name, const std::vector<std::size_t>& v) {
        Mat m(1, v.size());
        for (std::size_t i = 0; i < v.size(); ++i) m.data[i] = static_cast<double>(v[i]);
        f.put(name, std::move(m));
    };
    put_idx("train_idx", d.train_idx);
    put_idx("cal_idx", d.cal_idx);
    put_idx("test_idx", d.test_idx);
    return f;
}

Dataset dataset_from_tensors(const TensorFile& f) {
    Dataset d;
    d.inputs = f.get("inputs");
    const Mat& labels = f.get("labels");
    d.labels.resize(labels.cols);
    for (std::size_t i = 0; i < labels.cols; ++i) d.labels[i] = static_cast<int>(labels.data[i]);
    d.classes = static_cast<std::size_t>(f.get("classes").data[0]);
    auto get_idx = [&f](const std::string& name) {
        const Mat& m = f.get(name);
        std::vector<std::size_t> v(m.cols);
        for (std::size_t i = 0; i < m.cols; ++i) v[i] = static_cast<std::size_t>(m.data[i]);
        return v;
    };
    d.train_idx = get_idx("train_idx");
    d.cal_idx = get_idx("cal_idx");
    d.test_idx = get_idx("test_idx");
    return d;
}

TensorFile capture_to_tensors(const CalibrationCapture& c) {
    TensorFile f;
    for (std::size_t l = 0; l < c.layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l);
        f.put(prefix + ".X", c.layers[l].x);
        f.put(prefix + ".D", c.layers[l].deltas);
    }
    return f;
}

CalibrationCapture capture_from_tensors(const TensorFile& f) {
    CalibrationCapture c;
    for (std::size_t l = 0;; ++l) {
        const std::string prefix = "layer" + std::to_string(l);
        if (!f.has(prefix + ".X")) break;
        c.layers.push_back(LayerCapture{f.get(prefix + ".X"), f.get(prefix + ".D")});
    }
    if (c.layers.empty()) throw std::runtime_error("capture holds no layers");
    return c;
}

}  // namespace mop
