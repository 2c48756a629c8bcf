#include "aircross/cobyla.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

// Powell's COBYLA, re-expressed in zero-based C++.  The control flow follows
// the published routine (two nested drivers: a trust-region outer loop over a
// simplex of n+1 points, and a two-stage linear subproblem solver); labels
// mirror the original structure so the port can be audited against it.

namespace aircross {

namespace {

// Column-major dense matrix, just enough for this file.
class Mat {
public:
    Mat(int rows, int cols) : rows_(rows), v_(static_cast<std::size_t>(rows) * cols, 0.0) {}
    double& operator()(int i, int j) { return v_[static_cast<std::size_t>(j) * rows_ + i]; }
    double operator()(int i, int j) const {
        return v_[static_cast<std::size_t>(j) * rows_ + i];
    }

private:
    int rows_;
    std::vector<double> v_;
};

// Linear subproblem: find dx with |dx| <= rho.  Stage one minimizes the
// largest violation of the linearized constraints A(:,k) . dx >= b[k],
// k < m; stage two then spends any remaining freedom minimizing the
// linearized objective -A(:,m) . dx without increasing that violation.
// Returns true when dx reached the full trust-region length.
bool trstlp(int n, int m, const Mat& A, const std::vector<double>& b, double rho,
            std::vector<double>& dx, std::vector<int>& iact) {
    Mat z(n, n);
    std::vector<double> zdota(n, 0.0);
    std::vector<double> vmultc(m + 1, 0.0);
    std::vector<double> sdirn(n, 0.0);
    std::vector<double> dxnew(n, 0.0);
    std::vector<double> vmultd(m + 1, 0.0);

    bool full_step = true;
    int mcon = m;
    int nact = 0;
    int icon = -1;
    int nactx = 0;
    int icount = 0;
    int kk = 0;
    double resmax = 0.0;
    double optold = 0.0;
    double optnew = 0.0;
    double resold = 0.0;
    double stpful = 0.0;
    double step = 0.0;
    double ratio = 0.0;
    double temp = 0.0;

    for (int i = 0; i < n; ++i) {
        z(i, i) = 1.0;
        dx[i] = 0.0;
    }
    if (m >= 1) {
        for (int k = 0; k < m; ++k) {
            if (b[k] > resmax) {
                resmax = b[k];
                icon = k;
            }
        }
        for (int k = 0; k < m; ++k) {
            iact[k] = k;
            vmultc[k] = resmax - b[k];
        }
    }
    if (resmax == 0.0) goto stage_two;

stage_begin:
    optold = 0.0;
    icount = 0;
    nactx = 0;

iterate:
    if (mcon == m) {
        optnew = resmax;
    } else {
        optnew = 0.0;
        for (int i = 0; i < n; ++i) optnew -= dx[i] * A(i, mcon - 1);
    }
    // Stop the stage after three consecutive iterations without progress in
    // the stage objective or growth of the active set.
    if (icount == 0 || optnew < optold) {
        optold = optnew;
        nactx = nact;
        icount = 3;
    } else if (nact > nactx) {
        nactx = nact;
        icount = 3;
    } else {
        if (--icount == 0) goto degenerate;
    }

    if (icon < nact) goto delete_constraint;

    // Activate constraint iact[icon]: rotate the trailing columns of z so
    // they become orthogonal to its gradient (zeroing products that are
    // plausibly just roundoff).
    kk = iact[icon];
    for (int i = 0; i < n; ++i) dxnew[i] = A(i, kk);
    {
        double tot = 0.0;
        for (int k = n - 1; k >= nact; --k) {
            double sp = 0.0, spabs = 0.0;
            for (int i = 0; i < n; ++i) {
                const double t = z(i, k) * dxnew[i];
                sp += t;
                spabs += std::abs(t);
            }
            const double acca = spabs + 0.1 * std::abs(sp);
            const double accb = spabs + 0.2 * std::abs(sp);
            if (spabs >= acca || acca >= accb) sp = 0.0;
            if (tot == 0.0) {
                tot = sp;
            } else {
                const int kp = k + 1;
                temp = std::sqrt(sp * sp + tot * tot);
                const double alpha = sp / temp;
                const double beta = tot / temp;
                tot = temp;
                for (int i = 0; i < n; ++i) {
                    const double t = alpha * z(i, k) + beta * z(i, kp);
                    z(i, kp) = alpha * z(i, kp) - beta * z(i, k);
                    z(i, k) = t;
                }
            }
        }
        if (tot != 0.0) {
            zdota[nact] = tot;
            vmultc[icon] = vmultc[nact];
            vmultc[nact] = 0.0;
            ++nact;
            goto reorder_done;
        }
    }
    // The new gradient is a combination of the active ones; pick an active
    // constraint to drop (smallest multiplier ratio), or give up.
    {
        ratio = -1.0;
        for (int k = nact - 1; k >= 0; --k) {
            double zdotv = 0.0, zdvabs = 0.0;
            for (int i = 0; i < n; ++i) {
                const double t = z(i, k) * dxnew[i];
                zdotv += t;
                zdvabs += std::abs(t);
            }
            const double acca = zdvabs + 0.1 * std::abs(zdotv);
            const double accb = zdvabs + 0.2 * std::abs(zdotv);
            if (zdvabs < acca && acca < accb) {
                temp = zdotv / zdota[k];
                if (temp > 0.0 && iact[k] < m) {
                    const double tempa = vmultc[k] / temp;
                    if (ratio < 0.0 || tempa < ratio) ratio = tempa;
                }
                if (k >= 1) {
                    const int kw = iact[k];
                    for (int i = 0; i < n; ++i) dxnew[i] -= temp * A(i, kw);
                }
                vmultd[k] = temp;
            } else {
                vmultd[k] = 0.0;
            }
        }
        if (ratio < 0.0) goto degenerate;
        for (int k = 0; k < nact; ++k)
            vmultc[k] = std::max(0.0, vmultc[k] - ratio * vmultd[k]);
        if (icon < nact - 1) {
            const int isave = iact[icon];
            const double vsave = vmultc[icon];
            int k = icon;
            do {
                const int kp = k + 1;
                const int kw = iact[kp];
                double sp = 0.0;
                for (int i = 0; i < n; ++i) sp += z(i, k) * A(i, kw);
                temp = std::sqrt(sp * sp + zdota[kp] * zdota[kp]);
                const double alpha = zdota[kp] / temp;
                const double beta = sp / temp;
                zdota[kp] = alpha * zdota[k];
                zdota[k] = temp;
                for (int i = 0; i < n; ++i) {
                    const double t = alpha * z(i, kp) + beta * z(i, k);
                    z(i, kp) = alpha * z(i, k) - beta * z(i, kp);
                    z(i, k) = t;
                }
                iact[k] = kw;
                vmultc[k] = vmultc[kp];
                k = kp;
            } while (k < nact - 1);
            iact[k] = isave;
            vmultc[k] = vsave;
        }
        temp = 0.0;
        for (int i = 0; i < n; ++i) temp += z(i, nact - 1) * A(i, kk);
        if (temp == 0.0) goto degenerate;
        zdota[nact - 1] = temp;
        vmultc[icon] = 0.0;
        vmultc[nact - 1] = ratio;
    }

reorder_done:
    iact[icon] = iact[nact - 1];
    iact[nact - 1] = kk;
    // In stage two the objective pseudo-constraint must stay last in the
    // active set.
    if (mcon > m && kk != mcon - 1) {
        const int k = nact - 2;
        double sp = 0.0;
        for (int i = 0; i < n; ++i) sp += z(i, k) * A(i, kk);
        temp = std::sqrt(sp * sp + zdota[nact - 1] * zdota[nact - 1]);
        const double alpha = zdota[nact - 1] / temp;
        const double beta = sp / temp;
        zdota[nact - 1] = alpha * zdota[k];
        zdota[k] = temp;
        for (int i = 0; i < n; ++i) {
            const double t = alpha * z(i, nact - 1) + beta * z(i, k);
            z(i, nact - 1) = alpha * z(i, k) - beta * z(i, nact - 1);
            z(i, k) = t;
        }
        iact[nact - 1] = iact[k];
        iact[k] = kk;
        std::swap(vmultc[k], vmultc[nact - 1]);
    }
    if (mcon > m) goto stage_two_direction;
    // Stage one: move along a direction that keeps the active residuals
    // falling together.
    {
        const int ka = iact[nact - 1];
        temp = 0.0;
        for (int i = 0; i < n; ++i) temp += sdirn[i] * A(i, ka);
        temp = (temp - 1.0) / zdota[nact - 1];
        for (int i = 0; i < n; ++i) sdirn[i] -= temp * z(i, nact - 1);
    }
    goto take_step;

delete_constraint:
    if (icon < nact - 1) {
        const int isave = iact[icon];
        const double vsave = vmultc[icon];
        int k = icon;
        do {
            const int kp = k + 1;
            const int kw = iact[kp];
            double sp = 0.0;
            for (int i = 0; i < n; ++i) sp += z(i, k) * A(i, kw);
            temp = std::sqrt(sp * sp + zdota[kp] * zdota[kp]);
            const double alpha = zdota[kp] / temp;
            const double beta = sp / temp;
            zdota[kp] = alpha * zdota[k];
            zdota[k] = temp;
            for (int i = 0; i < n; ++i) {
                const double t = alpha * z(i, kp) + beta * z(i, k);
                z(i, kp) = alpha * z(i, k) - beta * z(i, kp);
                z(i, k) = t;
            }
            iact[k] = kw;
            vmultc[k] = vmultc[kp];
            k = kp;
        } while (k < nact - 1);
        iact[k] = isave;
        vmultc[k] = vsave;
    }
    --nact;
    if (mcon > m) goto stage_two_direction;
    {
        temp = 0.0;
        for (int i = 0; i < n; ++i) temp += sdirn[i] * z(i, nact);
        for (int i = 0; i < n; ++i) sdirn[i] -= temp * z(i, nact);
    }
    goto take_step;

stage_two_direction:
    temp = 1.0 / zdota[nact - 1];
    for (int i = 0; i < n; ++i) sdirn[i] = temp * z(i, nact - 1);

take_step: {
    // Step to the trust-region boundary, or far enough to zero the largest
    // violation in stage one.  Terms that could only be roundoff are
    // suppressed.
    double dd = rho * rho;
    double sd = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i) {
        if (std::abs(dx[i]) >= 1e-6 * rho) dd -= dx[i] * dx[i];
        sd += dx[i] * sdirn[i];
        ss += sdirn[i] * sdirn[i];
    }
    if (dd <= 0.0) goto degenerate;
    temp = std::sqrt(ss * dd);
    if (std::abs(sd) >= 1e-6 * temp) temp = std::sqrt(ss * dd + sd * sd);
    stpful = dd / (temp + sd);
    step = stpful;
    if (mcon == m) {
        const double acca = step + 0.1 * resmax;
        const double accb = step + 0.2 * resmax;
        if (step >= acca || acca >= accb) goto stage_two;
        step = std::min(step, resmax);
    }

    for (int i = 0; i < n; ++i) dxnew[i] = dx[i] + step * sdirn[i];
    if (mcon == m) {
        resold = resmax;
        resmax = 0.0;
        for (int k = 0; k < nact; ++k) {
            const int ka = iact[k];
            double r = b[ka];
            for (int i = 0; i < n; ++i) r -= A(i, ka) * dxnew[i];
            resmax = std::max(resmax, r);
        }
    }

    // Multipliers the active set would need at dxnew (zeroed when plausibly
    // roundoff), then residuals of the inactive constraints there.
    for (int k = nact - 1; k >= 0; --k) {
        double zdotw = 0.0, zdwabs = 0.0;
        for (int i = 0; i < n; ++i) {
            const double t = z(i, k) * dxnew[i];
            zdotw += t;
            zdwabs += std::abs(t);
        }
        const double acca = zdwabs + 0.1 * std::abs(zdotw);
        const double accb = zdwabs + 0.2 * std::abs(zdotw);
        if (zdwabs >= acca || acca >= accb) zdotw = 0.0;
        vmultd[k] = zdotw / zdota[k];
        if (k >= 1) {
            const int ka = iact[k];
            for (int i = 0; i < n; ++i) dxnew[i] -= vmultd[k] * A(i, ka);
        }
    }
    if (mcon > m) vmultd[nact - 1] = std::max(0.0, vmultd[nact - 1]);

    for (int i = 0; i < n; ++i) dxnew[i] = dx[i] + step * sdirn[i];
    for (int k = nact; k < mcon; ++k) {
        const int ka = iact[k];
        double sum = resmax - b[ka];
        double sumabs = resmax + std::abs(b[ka]);
        for (int i = 0; i < n; ++i) {
            const double t = A(i, ka) * dxnew[i];
            sum += t;
            sumabs += std::abs(t);
        }
        const double acca = sumabs + 0.1 * std::abs(sum);
        const double accb = sumabs + 0.2 * std::abs(sum);
        if (sumabs >= acca || acca >= accb) sum = 0.0;
        vmultd[k] = sum;
    }

    // Largest fraction of the move that keeps every multiplier/residual
    // nonnegative; a blocking constraint becomes the next icon.
    ratio = 1.0;
    icon = -1;
    for (int k = 0; k < mcon; ++k) {
        if (vmultd[k] < 0.0) {
            const double t = vmultc[k] / (vmultc[k] - vmultd[k]);
            if (t < ratio) {
                ratio = t;
                icon = k;
            }
        }
    }
    const double keep = 1.0 - ratio;
    for (int i = 0; i < n; ++i) dx[i] = keep * dx[i] + ratio * dxnew[i];
    for (int k = 0; k < mcon; ++k)
        vmultc[k] = std::max(0.0, keep * vmultc[k] + ratio * vmultd[k]);
    if (mcon == m) resmax = resold + ratio * (resmax - resold);

    if (icon >= 0) goto iterate;
    if (step == stpful) return full_step;
}

stage_two:
    mcon = m + 1;
    icon = mcon - 1;
    iact[mcon - 1] = mcon - 1;
    vmultc[mcon - 1] = 0.0;
    goto stage_begin;

degenerate:
    if (mcon == m) goto stage_two;
    full_step = false;
    return full_step;
}

}  // namespace

CobylaResult cobyla_minimize(int n, int m, std::span<const double> x0, double rho_begin,
                             double rho_end, int max_evals, const CobylaCallback& calcfc) {
    if (n < 1) throw std::invalid_argument("cobyla needs at least one variable");
    if (m < 0) throw std::invalid_argument("constraint count must be nonnegative");
    if (static_cast<int>(x0.size()) != n)
        throw std::invalid_argument("x0 size does not match variable count");
    if (!(rho_begin >= rho_end) || !(rho_end > 0.0))
        throw std::invalid_argument("need rho_begin >= rho_end > 0");

    constexpr double kAlpha = 0.25;  // simplex acceptability: lower edge bound
    constexpr double kBeta = 2.1;    // simplex acceptability: upper edge bound
    constexpr double kGamma = 0.5;   // fraction of rho for repair vertices
    constexpr double kDelta = 1.1;   // edge length that forces replacement

    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> con(std::max(m, 1), 0.0);
    Mat sim(n, n + 1);
    Mat simi(n, n);
    Mat datmat(m + 2, n + 1);
    Mat A(n, m + 1);
    std::vector<double> b(m + 1, 0.0);
    std::vector<double> vsig(n, 0.0), veta(n, 0.0), sigbar(n, 0.0), dx(n, 0.0);
    std::vector<int> iact(m + 1, 0);

    CobylaStatus status = CobylaStatus::TrustRegionConverged;
    double rho = rho_begin;
    double parmu = 0.0;
    int nfvals = 0;
    int jdrop = n;
    bool ibrnch = false;
    bool iflag = false;
    bool full_step = false;
    double f = 0.0;
    double resmax = 0.0;
    double prerec = 0.0;
    double prerem = 0.0;
    double parsig = 0.0;
    double temp = 0.0;

    for (int i = 0; i < n; ++i) {
        sim(i, n) = x[i];
        sim(i, i) = rho;
        simi(i, i) = 1.0 / rho;
    }

evaluate:
    if (nfvals >= max_evals && nfvals > 0) {
        status = CobylaStatus::EvaluationLimit;
        goto return_best_vertex;
    }
    ++nfvals;
    calcfc(x, f, std::span<double>(con.data(), static_cast<std::size_t>(m)));
    resmax = 0.0;
    for (int k = 0; k < m; ++k) resmax = std::max(resmax, -con[k]);
    if (ibrnch) goto judge_trial;

    for (int k = 0; k < m; ++k) datmat(k, jdrop) = con[k];
    datmat(m, jdrop) = f;
    datmat(m + 1, jdrop) = resmax;

    if (nfvals <= n + 1) {
        // Build the initial simplex one vertex at a time, keeping the best
        // point in the pole column.
        if (jdrop < n) {
            if (datmat(m, n) <= f) {
                x[jdrop] = sim(jdrop, n);
            } else {
                sim(jdrop, n) = x[jdrop];
                for (int k = 0; k < m + 2; ++k) {
                    datmat(k, jdrop) = datmat(k, n);
                    datmat(k, n) = k < m ? con[k] : (k == m ? f : resmax);
                }
                for (int k = 0; k <= jdrop; ++k) {
                    sim(jdrop, k) = -rho;
                    double t = 0.0;
                    for (int i = k; i <= jdrop; ++i) t -= simi(i, k);
                    simi(jdrop, k) = t;
                }
            }
        }
        if (nfvals <= n) {
            jdrop = nfvals - 1;
            x[jdrop] += rho;
            goto evaluate;
        }
    }
    ibrnch = true;

pick_best_vertex: {
    double phimin = datmat(m, n) + parmu * datmat(m + 1, n);
    int nbest = n;
    for (int j = 0; j < n; ++j) {
        const double phi = datmat(m, j) + parmu * datmat(m + 1, j);
        if (phi < phimin) {
            nbest = j;
            phimin = phi;
        } else if (phi == phimin && parmu == 0.0 &&
                   datmat(m + 1, j) < datmat(m + 1, nbest)) {
            nbest = j;
        }
    }
    if (nbest < n) {
        for (int k = 0; k < m + 2; ++k) std::swap(datmat(k, nbest), datmat(k, n));
        for (int i = 0; i < n; ++i) {
            const double t = sim(i, nbest);
            sim(i, nbest) = 0.0;
            sim(i, n) += t;
            double tempa = 0.0;
            for (int k = 0; k < n; ++k) {
                sim(i, k) -= t;
                tempa -= simi(k, i);
            }
            simi(nbest, i) = tempa;
        }
    }

    double error = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double t = i == j ? -1.0 : 0.0;
            for (int k = 0; k < n; ++k) t += simi(i, k) * sim(k, j);
            error = std::max(error, std::abs(t));
        }
    if (error > 0.1) {
        status = CobylaStatus::NumericalBreakdown;
        goto return_best_vertex;
    }

    // Linear models through the simplex: b holds minus the values at the
    // pole, A the gradients (objective gradient negated in its last column).
    for (int k = 0; k <= m; ++k) {
        b[k] = -datmat(k, n);
        for (int i = 0; i < n; ++i) {
            double t = 0.0;
            for (int j = 0; j < n; ++j) t += (datmat(k, j) + b[k]) * simi(j, i);
            A(i, k) = k == m ? -t : t;
        }
    }

    iflag = true;
    parsig = kAlpha * rho;
    const double pareta = kBeta * rho;
    for (int j = 0; j < n; ++j) {
        double wsig = 0.0, weta = 0.0;
        for (int i = 0; i < n; ++i) {
            wsig += simi(j, i) * simi(j, i);
            weta += sim(i, j) * sim(i, j);
        }
        vsig[j] = 1.0 / std::sqrt(wsig);
        veta[j] = std::sqrt(weta);
        if (vsig[j] < parsig || veta[j] > pareta) iflag = false;
    }

    if (ibrnch || iflag) goto trust_region_step;

    // Repair the simplex: replace its most distorted vertex with one at
    // distance gamma*rho along the corresponding inverse row, signed to
    // favor merit.
    jdrop = -1;
    temp = pareta;
    for (int j = 0; j < n; ++j) {
        if (veta[j] > temp) {
            jdrop = j;
            temp = veta[j];
        }
    }
    if (jdrop < 0) {
        for (int j = 0; j < n; ++j) {
            if (vsig[j] < temp) {
                jdrop = j;
                temp = vsig[j];
            }
        }
    }
    {
        const double scale = kGamma * rho * vsig[jdrop];
        for (int i = 0; i < n; ++i) dx[i] = scale * simi(jdrop, i);
        double cvmaxp = 0.0, cvmaxm = 0.0, sum = 0.0;
        for (int k = 0; k <= m; ++k) {
            sum = 0.0;
            for (int i = 0; i < n; ++i) sum += A(i, k) * dx[i];
            if (k < m) {
                const double t = datmat(k, n);
                cvmaxp = std::max(cvmaxp, -sum - t);
                cvmaxm = std::max(cvmaxm, sum - t);
            }
        }
        const double dxsign = parmu * (cvmaxp - cvmaxm) > 2.0 * sum ? -1.0 : 1.0;
        temp = 0.0;
        for (int i = 0; i < n; ++i) {
            dx[i] *= dxsign;
            sim(i, jdrop) = dx[i];
            temp += simi(jdrop, i) * dx[i];
        }
        for (int i = 0; i < n; ++i) simi(jdrop, i) /= temp;
        for (int j = 0; j < n; ++j) {
            if (j == jdrop) continue;
            double t = 0.0;
            for (int i = 0; i < n; ++i) t += simi(j, i) * dx[i];
            for (int i = 0; i < n; ++i) simi(j, i) -= t * simi(jdrop, i);
        }
        for (int j = 0; j < n; ++j) x[j] = sim(j, n) + dx[j];
    }
    goto evaluate;
}

trust_region_step:
    full_step = trstlp(n, m, A, b, rho, dx, iact);
    if (!full_step) {
        temp = 0.0;
        for (int i = 0; i < n; ++i) temp += dx[i] * dx[i];
        if (temp < 0.25 * rho * rho) {
            ibrnch = true;
            goto shrink_or_stop;
        }
    }
    {
        // Predicted violation and merit change over the linear models.
        double resnew = 0.0;
        b[m] = 0.0;
        double sum = 0.0;
        for (int k = 0; k <= m; ++k) {
            sum = b[k];
            for (int i = 0; i < n; ++i) sum -= A(i, k) * dx[i];
            if (k < m) resnew = std::max(resnew, sum);
        }
        prerec = datmat(m + 1, n) - resnew;
        const double barmu = prerec > 0.0 ? sum / prerec : 0.0;
        if (parmu < 1.5 * barmu) {
            parmu = 2.0 * barmu;
            const double phi = datmat(m, n) + parmu * datmat(m + 1, n);
            for (int j = 0; j < n; ++j) {
                const double t = datmat(m, j) + parmu * datmat(m + 1, j);
                if (t < phi) goto pick_best_vertex;
                if (t == phi && parmu == 0.0 && datmat(m + 1, j) < datmat(m + 1, n))
                    goto pick_best_vertex;
            }
        }
        prerem = parmu * prerec - sum;
    }
    for (int i = 0; i < n; ++i) x[i] = sim(i, n) + dx[i];
    ibrnch = true;
    goto evaluate;

judge_trial: {
    const double vmold = datmat(m, n) + parmu * datmat(m + 1, n);
    const double vmnew = f + parmu * resmax;
    double trured = vmold - vmnew;
    if (parmu == 0.0 && f == datmat(m, n)) {
        prerem = prerec;
        trured = datmat(m + 1, n) - resmax;
    }

    // Choose the vertex to replace: the one the step moved through most,
    // then any long edge when that keeps the simplex acceptable.
    double ratio = trured <= 0.0 ? 1.0 : 0.0;
    jdrop = -1;
    for (int j = 0; j < n; ++j) {
        double t = 0.0;
        for (int i = 0; i < n; ++i) t += simi(j, i) * dx[i];
        t = std::abs(t);
        if (t > ratio) {
            jdrop = j;
            ratio = t;
        }
        sigbar[j] = t * vsig[j];
    }
    double edgmax = kDelta * rho;
    int l = -1;
    for (int j = 0; j < n; ++j) {
        if (sigbar[j] >= parsig || sigbar[j] >= vsig[j]) {
            double t = veta[j];
            if (trured > 0.0) {
                t = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double d = dx[i] - sim(i, j);
                    t += d * d;
                }
                t = std::sqrt(t);
            }
            if (t > edgmax) {
                l = j;
                edgmax = t;
            }
        }
    }
    if (l >= 0) jdrop = l;
    if (jdrop < 0) goto shrink_or_stop;

    temp = 0.0;
    for (int i = 0; i < n; ++i) {
        sim(i, jdrop) = dx[i];
        temp += simi(jdrop, i) * dx[i];
    }
    for (int i = 0; i < n; ++i) simi(jdrop, i) /= temp;
    for (int j = 0; j < n; ++j) {
        if (j == jdrop) continue;
        double t = 0.0;
        for (int i = 0; i < n; ++i) t += simi(j, i) * dx[i];
        for (int i = 0; i < n; ++i) simi(j, i) -= t * simi(jdrop, i);
    }
    for (int k = 0; k < m + 2; ++k)
        datmat(k, jdrop) = k < m ? con[k] : (k == m ? f : resmax);
    if (trured > 0.0 && trured >= 0.1 * prerem) goto pick_best_vertex;
}

shrink_or_stop:
    if (!iflag) {
        ibrnch = false;
        goto pick_best_vertex;
    }
    if (rho > rho_end) {
        rho *= 0.5;
        if (rho <= 1.5 * rho_end) rho = rho_end;
        if (parmu > 0.0) {
            // Rescale the penalty from the spread of each function over the
            // simplex.
            double denom = 0.0;
            double cmin = 0.0, cmax = 0.0;
            for (int k = 0; k <= m; ++k) {
                cmin = cmax = datmat(k, n);
                for (int i = 0; i < n; ++i) {
                    cmin = std::min(cmin, datmat(k, i));
                    cmax = std::max(cmax, datmat(k, i));
                }
                if (k < m && cmin < 0.5 * cmax) {
                    const double t = std::max(cmax, 0.0) - cmin;
                    denom = denom <= 0.0 ? t : std::min(denom, t);
                }
            }
            if (denom == 0.0) {
                parmu = 0.0;
            } else if (cmax - cmin < parmu * denom) {
                parmu = (cmax - cmin) / denom;
            }
        }
        goto pick_best_vertex;
    }
    status = CobylaStatus::TrustRegionConverged;
    if (full_step) goto return_trial;

return_best_vertex:
    for (int i = 0; i < n; ++i) x[i] = sim(i, n);
    f = datmat(m, n);
    resmax = datmat(m + 1, n);

return_trial:
    CobylaResult result;
    result.x = std::move(x);
    result.objective = f;
    result.max_violation = resmax;
    result.evaluations = nfvals;
    result.status = status;
    return result;
}

}  // namespace aircross
