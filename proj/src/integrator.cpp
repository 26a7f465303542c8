#include "cics/integrator.hpp"

#include <algorithm>
#include <cmath>

#include "cics/error.hpp"

namespace cics {

std::string_view to_string(TrajectoryStatus status) {
  switch (status) {
    case TrajectoryStatus::complete: return "complete";
    case TrajectoryStatus::blow_up: return "blow-up";
    case TrajectoryStatus::domain_exit: return "domain-exit";
    case TrajectoryStatus::input_exhausted: return "input-exhausted";
  }
  return "unknown";
}

namespace {

// DOP853 tableau (Hairer & Wanner), error weights and dense-output weights.
// Node coefficients
constexpr double c2 = 0.526001519587677318785587544488e-01;
constexpr double c3 = 0.789002279381515978178381316732e-01;
constexpr double c4 = 0.118350341907227396726757197510e+00;
constexpr double c5 = 0.281649658092772603273242802490e+00;
constexpr double c6 = 0.333333333333333333333333333333e+00;
constexpr double c7 = 0.25e+00;
constexpr double c8 = 0.307692307692307692307692307692e+00;
constexpr double c9 = 0.651282051282051282051282051282e+00;
constexpr double c10 = 0.6e+00;
constexpr double c11 = 0.857142857142857142857142857142e+00;
constexpr double c14 = 0.1e+00;
constexpr double c15 = 0.2e+00;
constexpr double c16 = 0.777777777777777777777777777778e+00;

// Runge-Kutta matrix
constexpr double a21 = 5.26001519587677318785587544488e-2;
constexpr double a31 = 1.97250569845378994544595329183e-2;
constexpr double a32 = 5.91751709536136983633785987549e-2;
constexpr double a41 = 2.95875854768068491816892993775e-2;
constexpr double a43 = 8.87627564304205475450678981324e-2;
constexpr double a51 = 2.41365134159266685502369798665e-1;
constexpr double a53 = -8.84549479328286085344864962717e-1;
constexpr double a54 = 9.24834003261792003115737966543e-1;
constexpr double a61 = 3.7037037037037037037037037037e-2;
constexpr double a64 = 1.70828608729473871279604482173e-1;
constexpr double a65 = 1.25467687566822425016691814123e-1;
constexpr double a71 = 3.7109375e-2;
constexpr double a74 = 1.70252211019544039314978060272e-1;
constexpr double a75 = 6.02165389804559606850219397283e-2;
constexpr double a76 = -1.7578125e-2;
constexpr double a81 = 3.70920001185047927108779319836e-2;
constexpr double a84 = 1.70383925712239993810214054705e-1;
constexpr double a85 = 1.07262030446373284651809199168e-1;
constexpr double a86 = -1.53194377486244017527936158236e-2;
constexpr double a87 = 8.27378916381402288758473766002e-3;
constexpr double a91 = 6.24110958716075717114429577812e-1;
constexpr double a94 = -3.36089262944694129406857109825e0;
constexpr double a95 = -8.68219346841726006818189891453e-1;
constexpr double a96 = 2.75920996994467083049415600797e1;
constexpr double a97 = 2.01540675504778934086186788979e1;
constexpr double a98 = -4.34898841810699588477366255144e1;
constexpr double a101 = 4.77662536438264365890433908527e-1;
constexpr double a104 = -2.48811461997166764192642586468e0;
constexpr double a105 = -5.90290826836842996371446475743e-1;
constexpr double a106 = 2.12300514481811942347288949897e1;
constexpr double a107 = 1.52792336328824235832596922938e1;
constexpr double a108 = -3.32882109689848629194453265587e1;
constexpr double a109 = -2.03312017085086261358222928593e-2;
constexpr double a111 = -9.3714243008598732571704021658e-1;
constexpr double a114 = 5.18637242884406370830023853209e0;
constexpr double a115 = 1.09143734899672957818500254654e0;
constexpr double a116 = -8.14978701074692612513997267357e0;
constexpr double a117 = -1.85200656599969598641566180701e1;
constexpr double a118 = 2.27394870993505042818970056734e1;
constexpr double a119 = 2.49360555267965238987089396762e0;
constexpr double a1110 = -3.0467644718982195003823669022e0;
constexpr double a121 = 2.27331014751653820792359768449e0;
constexpr double a124 = -1.05344954667372501984066689879e1;
constexpr double a125 = -2.00087205822486249909675718444e0;
constexpr double a126 = -1.79589318631187989172765950534e1;
constexpr double a127 = 2.79488845294199600508499808837e1;
constexpr double a128 = -2.85899827713502369474065508674e0;
constexpr double a129 = -8.87285693353062954433549289258e0;
constexpr double a1210 = 1.23605671757943030647266201528e1;
constexpr double a1211 = 6.43392746015763530355970484046e-1;

// Additional coefficients for dense output
constexpr double a141 = 5.61675022830479523392909219681e-2;
constexpr double a147 = 2.53500210216624811088794765333e-1;
constexpr double a148 = -2.46239037470802489917441475441e-1;
constexpr double a149 = -1.24191423263816360469010140626e-1;
constexpr double a1410 = 1.5329179827876569731206322685e-1;
constexpr double a1411 = 8.20105229563468988491666602057e-3;
constexpr double a1412 = 7.56789766054569976138603589584e-3;
constexpr double a1413 = -8.298e-3;
constexpr double a151 = 3.18346481635021405060768473261e-2;
constexpr double a156 = 2.83009096723667755288322961402e-2;
constexpr double a157 = 5.35419883074385676223797384372e-2;
constexpr double a158 = -5.49237485713909884646569340306e-2;
constexpr double a1511 = -1.08347328697249322858509316994e-4;
constexpr double a1512 = 3.82571090835658412954920192323e-4;
constexpr double a1513 = -3.40465008687404560802977114492e-4;
constexpr double a1514 = 1.41312443674632500278074618366e-1;
constexpr double a161 = -4.28896301583791923408573538692e-1;
constexpr double a166 = -4.69762141536116384314449447206e0;
constexpr double a167 = 7.68342119606259904184240953878e0;
constexpr double a168 = 4.06898981839711007970213554331e0;
constexpr double a169 = 3.56727187455281109270669543021e-1;
constexpr double a1613 = -1.39902416515901462129418009734e-3;
constexpr double a1614 = 2.9475147891527723389556272149e0;
constexpr double a1615 = -9.15095847217987001081870187138e0;


// Weight coefficients
constexpr double b1 = 5.42937341165687622380535766363e-2;
constexpr double b6 = 4.45031289275240888144113950566e0;
constexpr double b7 = 1.89151789931450038304281599044e0;
constexpr double b8 = -5.8012039600105847814672114227e0;
constexpr double b9 = 3.1116436695781989440891606237e-1;
constexpr double b10 = -1.52160949662516078556178806805e-1;
constexpr double b11 = 2.01365400804030348374776537501e-1;
constexpr double b12 = 4.47106157277725905176885569043e-2;

// Error 3 coefficients
constexpr double e31 = 0.244094488188976377952755905512e+00;
constexpr double e32 = 0.733846688281611857341361741547e+00;
constexpr double e33 = 0.220588235294117647058823529412e-01;

// Error 5 coefficients
constexpr double e51 = 0.1312004499419488073250102996e-01;
constexpr double e56 = -0.1225156446376204440720569753e+01;
constexpr double e57 = -0.4957589496572501915214079952e+00;
constexpr double e58 = 0.1664377182454986536961530415e+01;
constexpr double e59 = -0.3503288487499736816886487290e+00;
constexpr double e510 = 0.3341791187130174790297318841e+00;
constexpr double e511 = 0.8192320648511571246570742613e-01;
constexpr double e512 = -0.2235530786388629525884427845e-01;

// Interpolation coefficients
constexpr double d41 = -0.84289382761090128651353491142e+01;
constexpr double d46 = 0.56671495351937776962531783590e+00;
constexpr double d47 = -0.30689499459498916912797304727e+01;
constexpr double d48 = 0.23846676565120698287728149680e+01;
constexpr double d49 = 0.21170345824450282767155149946e+01;
constexpr double d410 = -0.87139158377797299206789907490e+00;
constexpr double d411 = 0.22404374302607882758541771650e+01;
constexpr double d412 = 0.63157877876946881815570249290e+00;
constexpr double d413 = -0.88990336451333310820698117400e-01;
constexpr double d414 = 0.18148505520854727256656404962e+02;
constexpr double d415 = -0.91946323924783554000451984436e+01;
constexpr double d416 = -0.44360363875948939664310572000e+01;
constexpr double d51 = 0.10427508642579134603413151009e+02;
constexpr double d56 = 0.24228349177525818288430175319e+03;
constexpr double d57 = 0.16520045171727028198505394887e+03;
constexpr double d58 = -0.37454675472269020279518312152e+03;
constexpr double d59 = -0.22113666853125306036270938578e+02;
constexpr double d510 = 0.77334326684722638389603898808e+01;
constexpr double d511 = -0.30674084731089398182061213626e+02;
constexpr double d512 = -0.93321305264302278729567221706e+01;
constexpr double d513 = 0.15697238121770843886131091075e+02;
constexpr double d514 = -0.31139403219565177677282850411e+02;
constexpr double d515 = -0.93529243588444783865713862664e+01;
constexpr double d516 = 0.35816841486394083752465898540e+02;
constexpr double d61 = 0.19985053242002433820987653617e+02;
constexpr double d66 = -0.38703730874935176555105901742e+03;
constexpr double d67 = -0.18917813819516756882830838328e+03;
constexpr double d68 = 0.52780815920542364900561016686e+03;
constexpr double d69 = -0.11573902539959630126141871134e+02;
constexpr double d610 = 0.68812326946963000169666922661e+01;
constexpr double d611 = -0.10006050966910838403183860980e+01;
constexpr double d612 = 0.77771377980534432092869265740e+00;
constexpr double d613 = -0.27782057523535084065932004339e+01;
constexpr double d614 = -0.60196695231264120758267380846e+02;
constexpr double d615 = 0.84320405506677161018159903784e+02;
constexpr double d616 = 0.11992291136182789328035130030e+02;
constexpr double d71 = -0.25693933462703749003312586129e+02;
constexpr double d76 = -0.15418974869023643374053993627e+03;
constexpr double d77 = -0.23152937917604549567536039109e+03;
constexpr double d78 = 0.35763911791061412378285349910e+03;
constexpr double d79 = 0.93405324183624310003907691704e+02;
constexpr double d710 = -0.37458323136451633156875139351e+02;
constexpr double d711 = 0.10409964950896230045147246184e+03;
constexpr double d712 = 0.29840293426660503123344363579e+02;
constexpr double d713 = -0.43533456590011143754432175058e+02;
constexpr double d714 = 0.96324553959188282948394950600e+02;
constexpr double d715 = -0.39177261675615439165231486172e+02;
constexpr double d716 = -0.14972683625798562581422125276e+03;

Vector dense_eval(const Matrix& coeff, double s) {
  const double s1 = 1.0 - s;
  return coeff.col(0) +
         s * (coeff.col(1) +
              s1 * (coeff.col(2) +
                    s * (coeff.col(3) +
                         s1 * (coeff.col(4) + s * (coeff.col(5) + s1 * (coeff.col(6) + s * coeff.col(7)))))));
}

double rms_scaled(const Vector& v, const Vector& scale) {
  return std::sqrt((v.array() / scale.array()).square().mean());
}

}  // namespace

class TrajectoryBuilder {
 public:
  TrajectoryBuilder(const Vector& xi, const InputSignal& u, double t_end, const Tolerances& tol,
                    const Vector& f0) {
    traj_.tol_ = tol;
    traj_.input_ = u;
    traj_.requested_end_ = t_end;
    traj_.times_.push_back(0.0);
    traj_.states_.push_back(xi);
    traj_.derivs_.push_back(f0);
  }

  void push(double t0, double h, Matrix coeff, double t1, const Vector& x1, const Vector& f1) {
    if (!traj_.decimated_) traj_.segments_.push_back({t0, h, std::move(coeff)});
    traj_.times_.push_back(t1);
    traj_.states_.push_back(x1);
    traj_.derivs_.push_back(f1);
    ++traj_.steps_;
    if (traj_.times_.size() > traj_.tol_.memory_cap) decimate();
  }

  void finish(TrajectoryStatus status, double sigma, std::string diagnostic = {}) {
    traj_.status_ = status;
    traj_.sigma_ = sigma;
    traj_.diagnostic_ = std::move(diagnostic);
  }

  Trajectory take() { return std::move(traj_); }

 private:
  // Keep the first node at or after each point of a uniform time grid with
  // half the memory cap, plus both endpoints; dense segments are dropped and
  // evaluation falls back to cubic Hermite interpolation.
  void decimate() {
    const std::size_t keep = std::max<std::size_t>(2, traj_.tol_.memory_cap / 2);
    const double t0 = traj_.times_.front(), t1 = traj_.times_.back();
    std::vector<double> times;
    std::vector<Vector> states, derivs;
    std::size_t j = 0;
    for (std::size_t k = 0; k < keep; ++k) {
      const double target = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(keep - 1);
      while (j + 1 < traj_.times_.size() && traj_.times_[j] < target) ++j;
      if (!times.empty() && times.back() == traj_.times_[j]) continue;
      times.push_back(traj_.times_[j]);
      states.push_back(traj_.states_[j]);
      derivs.push_back(traj_.derivs_[j]);
    }
    traj_.times_ = std::move(times);
    traj_.states_ = std::move(states);
    traj_.derivs_ = std::move(derivs);
    traj_.segments_.clear();
    traj_.decimated_ = true;
  }

  Trajectory traj_;
};

Vector Trajectory::eval(double t) const {
  if (!(t >= 0.0) || t > times_.back()) {
    fail(ErrorCode::out_of_interval, "trajectory evaluation at t = " + std::to_string(t) +
                                         " outside [0, " + std::to_string(times_.back()) + "]");
  }
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return states_.front();
  std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
  if (times_[i] == t) return states_[i];
  if (!decimated_) {
    const Segment& s = segments_[i];
    return dense_eval(s.coeff, (t - s.t0) / s.h);
  }
  // Cubic Hermite between retained nodes.
  const double a = times_[i], b = times_[i + 1], h = b - a;
  const double s = (t - a) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * states_[i] + h10 * h * derivs_[i] + h01 * states_[i + 1] + h11 * h * derivs_[i + 1];
}

Trajectory flow(const SystemDef& sys, const Vector& xi, const InputSignal& u, double t_end,
                const Tolerances& tol) {
  require(xi.size() == sys.dim(), ErrorCode::precondition, "initial state has the wrong dimension");
  require(u.dim() == sys.input_dim(), ErrorCode::precondition, "input signal has the wrong dimension");
  require(sys.state_domain().contains(xi), ErrorCode::domain_violation,
          "initial state lies outside the state domain");
  require(t_end > 0.0 && std::isfinite(t_end), ErrorCode::precondition, "t_end must be positive and finite");
  require(tol.rel > 0.0 && tol.abs > 0.0, ErrorCode::precondition, "tolerances must be positive");

  const int n = sys.dim();
  const double target = std::min(t_end, u.horizon());
  const bool input_limited = u.horizon() < t_end;

  auto field = [&](double t, double step_start, const Vector& x) {
    return sys.raw_field(x, u.evaluate_in_step(t, step_start));
  };

  double t = 0.0;
  Vector x = xi;
  Vector k1 = field(0.0, 0.0, x);
  require(k1.allFinite(), ErrorCode::non_finite, "field is not finite at the initial state");
  TrajectoryBuilder builder(xi, u, t_end, tol, k1);

  auto scale_of = [&](const Vector& a, const Vector& b) {
    return (tol.abs + tol.rel * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array()).matrix().eval();
  };

  double h = tol.initial_step;
  if (h <= 0.0) {
    const Vector sk = scale_of(x, x);
    const double dn0 = rms_scaled(x, sk), dn1 = rms_scaled(k1, sk);
    double h0 = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
    h0 = std::min({h0, tol.max_step, target});
    const Vector x1 = x + h0 * k1;
    const Vector f1 = field(h0, 0.0, x1);
    double h1 = 1e-6;
    if (f1.allFinite()) {
      const double dn2 = rms_scaled(f1 - k1, sk) / h0;
      const double dmax = std::max(dn1, dn2);
      h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 1.0 / 8.0);
    }
    h = std::min({100 * h0, h1, tol.max_step});
  }

  Vector k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), k8(n), k9(n), k10(n), k11(n), k12(n), incr(n), x_new(n);
  bool last_rejected = false;
  std::int64_t attempts = 0;

  while (t < target) {
    if (++attempts > tol.max_steps) {
      builder.finish(TrajectoryStatus::blow_up, t, "step budget exhausted at t = " + std::to_string(t));
      return builder.take();
    }
    const double h_floor = tol.min_step * std::max(1.0, std::abs(t));
    if (h < h_floor) {
      builder.finish(TrajectoryStatus::blow_up, t, "step-size underflow at t = " + std::to_string(t));
      return builder.take();
    }
    // Never step across an input breakpoint or past the target.
    double stop = target;
    if (const auto bp = u.next_breakpoint(t); bp && *bp < stop) stop = *bp;
    bool hits_stop = false;
    const double h_proposed = h;
    if (t + h >= stop - 1e-13 * std::max(1.0, std::abs(stop))) {
      h = stop - t;
      hits_stop = true;
    }

    const double ts = t;
    k2 = field(t + c2 * h, ts, x + h * a21 * k1);
    k3 = field(t + c3 * h, ts, x + h * (a31 * k1 + a32 * k2));
    k4 = field(t + c4 * h, ts, x + h * (a41 * k1 + a43 * k3));
    k5 = field(t + c5 * h, ts, x + h * (a51 * k1 + a53 * k3 + a54 * k4));
    k6 = field(t + c6 * h, ts, x + h * (a61 * k1 + a64 * k4 + a65 * k5));
    k7 = field(t + c7 * h, ts, x + h * (a71 * k1 + a74 * k4 + a75 * k5 + a76 * k6));
    k8 = field(t + c8 * h, ts, x + h * (a81 * k1 + a84 * k4 + a85 * k5 + a86 * k6 + a87 * k7));
    k9 = field(t + c9 * h, ts, x + h * (a91 * k1 + a94 * k4 + a95 * k5 + a96 * k6 + a97 * k7 + a98 * k8));
    k10 = field(t + c10 * h, ts,
                x + h * (a101 * k1 + a104 * k4 + a105 * k5 + a106 * k6 + a107 * k7 + a108 * k8 + a109 * k9));
    k11 = field(t + c11 * h, ts,
                x + h * (a111 * k1 + a114 * k4 + a115 * k5 + a116 * k6 + a117 * k7 + a118 * k8 + a119 * k9 +
                         a1110 * k10));
    const double t_new = hits_stop ? stop : t + h;
    k12 = field(t_new, ts,
                x + h * (a121 * k1 + a124 * k4 + a125 * k5 + a126 * k6 + a127 * k7 + a128 * k8 + a129 * k9 +
                         a1210 * k10 + a1211 * k11));
    incr = b1 * k1 + b6 * k6 + b7 * k7 + b8 * k8 + b9 * k9 + b10 * k10 + b11 * k11 + b12 * k12;
    x_new = x + h * incr;

    const bool finite = k2.allFinite() && k3.allFinite() && k4.allFinite() && k5.allFinite() &&
                        k6.allFinite() && k7.allFinite() && k8.allFinite() && k9.allFinite() &&
                        k10.allFinite() && k11.allFinite() && k12.allFinite() && x_new.allFinite();
    if (!finite) {
      h *= 0.25;
      last_rejected = true;
      continue;
    }

    // Combined fifth/third-order error estimate.
    const Vector sk = scale_of(x, x_new);
    const Vector err3 = incr - e31 * k1 - e32 * k9 - e33 * k12;
    const Vector err5 = e51 * k1 + e56 * k6 + e57 * k7 + e58 * k8 + e59 * k9 + e510 * k10 + e511 * k11 + e512 * k12;
    const double s3 = (err3.array() / sk.array()).square().sum();
    const double s5 = (err5.array() / sk.array()).square().sum();
    double deno = s5 + 0.01 * s3;
    if (deno <= 0.0) deno = 1.0;
    const double en = std::abs(h) * s5 * std::sqrt(1.0 / (n * deno));
    if (en > 1.0) {
      h *= std::max(0.333, 0.9 * std::pow(en, -0.125));
      last_rejected = true;
      continue;
    }

    const Vector k13 = field(t_new, ts, x_new);
    if (!k13.allFinite()) {
      h *= 0.25;
      last_rejected = true;
      continue;
    }

    Matrix coeff(n, 8);
    const Vector ydiff = x_new - x;
    const Vector bspl = h * k1 - ydiff;
    coeff.col(0) = x;
    coeff.col(1) = ydiff;
    coeff.col(2) = bspl;
    coeff.col(3) = ydiff - h * k13 - bspl;
    Vector r5 = d41 * k1 + d46 * k6 + d47 * k7 + d48 * k8 + d49 * k9 + d410 * k10 + d411 * k11 + d412 * k12;
    Vector r6 = d51 * k1 + d56 * k6 + d57 * k7 + d58 * k8 + d59 * k9 + d510 * k10 + d511 * k11 + d512 * k12;
    Vector r7 = d61 * k1 + d66 * k6 + d67 * k7 + d68 * k8 + d69 * k9 + d610 * k10 + d611 * k11 + d612 * k12;
    Vector r8 = d71 * k1 + d76 * k6 + d77 * k7 + d78 * k8 + d79 * k9 + d710 * k10 + d711 * k11 + d712 * k12;
    const Vector k14 = field(t + c14 * h, ts,
                             x + h * (a141 * k1 + a147 * k7 + a148 * k8 + a149 * k9 + a1410 * k10 + a1411 * k11 +
                                      a1412 * k12 + a1413 * k13));
    const Vector k15 = field(t + c15 * h, ts,
                             x + h * (a151 * k1 + a156 * k6 + a157 * k7 + a158 * k8 + a1511 * k11 + a1512 * k12 +
                                      a1513 * k13 + a1514 * k14));
    const Vector k16 = field(t + c16 * h, ts,
                             x + h * (a161 * k1 + a166 * k6 + a167 * k7 + a168 * k8 + a169 * k9 + a1613 * k13 +
                                      a1614 * k14 + a1615 * k15));
    coeff.col(4) = h * (r5 + d413 * k13 + d414 * k14 + d415 * k15 + d416 * k16);
    coeff.col(5) = h * (r6 + d513 * k13 + d514 * k14 + d515 * k15 + d516 * k16);
    coeff.col(6) = h * (r7 + d613 * k13 + d614 * k14 + d615 * k15 + d616 * k16);
    coeff.col(7) = h * (r8 + d713 * k13 + d714 * k14 + d715 * k15 + d716 * k16);

    if (x_new.norm() > tol.blowup_cap) {
      // Locate the cap crossing on the dense output.
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (dense_eval(coeff, mid).norm() > tol.blowup_cap ? hi : lo) = mid;
      }
      const double t_cross = t + lo * h;
      if (t_cross > t) {
        const Vector x_cross = dense_eval(coeff, lo);
        builder.push(t, h, coeff, t_cross, x_cross, field(t_cross, ts, x_cross));
      }
      builder.finish(TrajectoryStatus::blow_up, t + hi * h,
                     "state norm exceeded the blow-up cap " + std::to_string(tol.blowup_cap));
      return builder.take();
    }

    if (!sys.state_domain().contains(x_new)) {
      double lo = 0.0, hi = 1.0;
      while ((hi - lo) * h > tol.exit_resolution) {
        const double mid = 0.5 * (lo + hi);
        (sys.state_domain().contains(dense_eval(coeff, mid)) ? lo : hi) = mid;
      }
      const double t_in = t + lo * h;
      if (t_in > t) {
        const Vector x_in = dense_eval(coeff, lo);
        builder.push(t, h, coeff, t_in, x_in, field(t_in, ts, x_in));
      }
      builder.finish(TrajectoryStatus::domain_exit, t_in, "trajectory left the state domain");
      return builder.take();
    }

    t = t_new;
    x = x_new;
    // FSAL, except across a breakpoint where the input segment changes.
    Vector k_next = (hits_stop && t < target) ? field(t, t, x) : k13;
    builder.push(ts, h, std::move(coeff), t, x, k_next);
    k1 = std::move(k_next);

    double fac = en == 0.0 ? 6.0 : std::clamp(0.9 * std::pow(en, -0.125), 0.333, 6.0);
    if (last_rejected) fac = std::min(fac, 1.0);
    last_rejected = false;
    h = std::min(hits_stop ? std::max(h_proposed, h * fac) : h * fac, tol.max_step);
  }

  builder.finish(input_limited ? TrajectoryStatus::input_exhausted : TrajectoryStatus::complete,
                 std::numeric_limits<double>::infinity());
  return builder.take();
}

Trajectory flow_autonomous(const SystemDef& sys, const Vector& xi, double t_end, const Tolerances& tol) {
  return flow(sys, xi, InputSignal::constant(sys.u_bar()), t_end, tol);
}

}  // namespace cics
