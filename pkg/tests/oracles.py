"""Independent reference implementations used as test oracles.

Everything here is deliberately written the slow, obvious way (dense solves,
scalar loops, brute-force definitions) and kept free of imports from the
package's own numerics, so that agreement between the two routes is
meaningful evidence rather than a tautology.
"""

import math

import numpy as np


def toeplitz_lpc(r, order):
    """LPC coefficients by dense Toeplitz solve of the normal equations.

    Solves R a = -r[1:order+1] with R[i, j] = r[|i-j|]; returns (a, gain)
    with gain = sqrt(r[0] + a . r[1:]).
    """
    r = np.asarray(r, dtype=np.float64)
    R = np.empty((order, order))
    for i in range(order):
        for j in range(order):
            R[i, j] = r[abs(i - j)]
    a = np.linalg.solve(R, -r[1: order + 1])
    err = r[0] + float(np.dot(a, r[1: order + 1]))
    return a, math.sqrt(max(err, 0.0))


def naive_lstm(features, wx_list, wh_list, b_list):
    """Scalar-loop LSTM forward pass; gate order (input, forget, cell, output)."""

    def sigmoid(v):
        return 1.0 / (1.0 + math.exp(-v))

    x = [list(map(float, row)) for row in np.asarray(features)]
    for wx, wh, b in zip(wx_list, wh_list, b_list):
        hsize = wh.shape[1]
        h = [0.0] * hsize
        c = [0.0] * hsize
        outs = []
        for row in x:
            z = []
            for k in range(4 * hsize):
                acc = b[k]
                for j, xv in enumerate(row):
                    acc += wx[k, j] * xv
                for j in range(hsize):
                    acc += wh[k, j] * h[j]
                z.append(float(acc))
            new_h = []
            new_c = []
            for j in range(hsize):
                i_g = sigmoid(z[j])
                f_g = sigmoid(z[hsize + j])
                g_g = math.tanh(z[2 * hsize + j])
                o_g = sigmoid(z[3 * hsize + j])
                cj = f_g * c[j] + i_g * g_g
                new_c.append(cj)
                new_h.append(o_g * math.tanh(cj))
            h, c = new_h, new_c
            outs.append(list(h))
        x = outs
    return np.array(x)


def naive_attention(hidden, wq, wk, wv, scale):
    """Scalar-loop QKV attention pooling with columnwise max."""
    h = np.asarray(hidden, dtype=np.float64)
    L, d = h.shape

    def matmul(m, w):
        out = [[0.0] * w.shape[1] for _ in range(len(m))]
        for i in range(len(m)):
            for j in range(w.shape[1]):
                acc = 0.0
                for k in range(w.shape[0]):
                    acc += m[i][k] * w[k, j]
                out[i][j] = acc
        return out

    q = matmul(h.tolist(), wq)
    k = matmul(h.tolist(), wk)
    v = matmul(h.tolist(), wv)
    denom = math.sqrt(d) if scale else 1.0
    context = [-math.inf] * d
    for i in range(L):
        scores = [sum(q[i][t] * k[j][t] for t in range(d)) / denom for j in range(L)]
        m = max(scores)
        exps = [math.exp(s - m) for s in scores]
        total = sum(exps)
        weights = [e / total for e in exps]
        for col in range(d):
            o = sum(weights[j] * v[j][col] for j in range(L))
            if o > context[col]:
                context[col] = o
    return np.array(context)


def wilson_quadratic(correct, total, confidence):
    """Wilson interval as the roots of (p - c)^2 = z^2 c (1 - c) / n.

    Independent route: solve the defining quadratic with numpy's root
    finder instead of the closed form.
    """
    from scipy.stats import norm

    z = float(norm.ppf(0.5 + confidence / 2.0))
    p = correct / total
    n = total
    # (1 + z^2/n) c^2 - (2p + z^2/n) c + p^2 = 0
    coeffs = [1.0 + z * z / n, -(2.0 * p + z * z / n), p * p]
    roots = np.sort(np.roots(coeffs).real)
    return float(max(0.0, roots[0])), float(min(1.0, roots[1]))


def brute_silhouette(points, labels):
    """Silhouette from the definition, euclidean, all pairwise loops."""
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)

    def d(i, j):
        return math.sqrt(sum((pts[i, k] - pts[j, k]) ** 2 for k in range(pts.shape[1])))

    scores = []
    for i in range(n):
        same = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not same:
            scores.append(0.0)
            continue
        a = sum(d(i, j) for j in same) / len(same)
        b = math.inf
        for lab in set(labels):
            if lab == labels[i]:
                continue
            members = [j for j in range(n) if labels[j] == lab]
            b = min(b, sum(d(i, j) for j in members) / len(members))
        m = max(a, b)
        scores.append(0.0 if m == 0.0 else (b - a) / m)
    return sum(scores) / n


def brute_pca(data, k):
    """PCA via an explicitly assembled covariance and numpy's general eig."""
    x = np.asarray(data, dtype=np.float64)
    n, d = x.shape
    mean = x.sum(axis=0) / n
    c = x - mean
    cov = np.zeros((d, d))
    for i in range(n):
        cov += np.outer(c[i], c[i])
    cov /= n - 1
    evals, evecs = np.linalg.eig(cov)
    evals = evals.real
    evecs = evecs.real
    order = np.argsort(evals)[::-1][:k]
    return mean, evecs[:, order].T, np.maximum(evals[order], 0.0)


def brute_word_match(reference, response):
    """Greedy multiset matching by list removal."""
    ref = [w.strip(".,!?;:'\"()").lower() for w in reference.split()]
    ref = [w for w in ref if w]
    pool = [w.strip(".,!?;:'\"()").lower() for w in response.split()]
    pool = [w for w in pool if w]
    correct = 0
    for w in ref:
        if w in pool:
            pool.remove(w)
            correct += 1
    return correct, len(ref)


def resonance_peak_hz(a_coeffs, sample_rate, n_grid=1 << 17):
    """Frequency of the max of |1/A| on a dense rFFT grid."""
    denom = np.fft.rfft(np.concatenate(([1.0], np.asarray(a_coeffs))), n_grid)
    mag = 1.0 / np.abs(denom)
    freqs = np.fft.rfftfreq(n_grid, 1.0 / sample_rate)
    return float(freqs[np.argmax(mag)])


def synthetic_vowel(sample_rate=24000, seconds=2.0, f0=120.0,
                    formants=(700.0, 1200.0, 2600.0), radius=0.93, level=0.08):
    """Pulse train through cascaded two-pole resonators; returns samples."""
    from scipy.signal import lfilter

    n = int(round(seconds * sample_rate))
    x = np.zeros(n)
    x[:: int(round(sample_rate / f0))] = 1.0
    for f in formants:
        theta = 2.0 * np.pi * f / sample_rate
        x = lfilter([1.0], [1.0, -2.0 * radius * np.cos(theta), radius * radius], x)
    return x * (level / np.sqrt(np.mean(x * x)))
