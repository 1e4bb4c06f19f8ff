import init, { bound_report, stability_profile, anisotropy_gap } from "./pkg/stepbound_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const fmt = (v) => (v === null || v === undefined ? "–" : typeof v === "number" ? v.toPrecision(6) : String(v));

function fail(out, e) {
  out.innerHTML = "";
  const p = document.createElement("p");
  p.className = "err";
  p.textContent = e.message ?? String(e);
  out.appendChild(p);
}

function table(out, rows) {
  const t = document.createElement("table");
  for (const [k, v] of rows) {
    const tr = t.insertRow();
    tr.insertCell().textContent = k;
    tr.insertCell().textContent = fmt(v);
  }
  out.innerHTML = "";
  out.appendChild(t);
}

function meshSpec() {
  const n = num("n");
  switch ($("mesh").value) {
    case "uniform_interval": return { kind: "uniform_interval", n };
    case "stretched": return { kind: "stretched", nx: n, ny: n, ratio: 10 };
    case "random_perturbed": return { kind: "random_perturbed", nx: n, ny: n, amplitude: 0.2 / n, seed: 11 };
    default: return { kind: "structured", nx: n, ny: n };
  }
}

function drawMesh(mesh) {
  const c = $("mesh-canvas");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  if (!mesh) return;
  const xs = mesh.vertices.map((v) => v[0]);
  const ys = mesh.vertices.map((v) => (v.length > 1 ? v[1] : 0));
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const s = (c.width - 20) / Math.max(x1 - x0, y1 - y0, 1e-12);
  const px = (i) => 10 + (xs[i] - x0) * s;
  const py = (i) => c.height - 10 - (ys[i] - y0) * s - (y1 === y0 ? c.height / 2 - 10 : 0);
  g.strokeStyle = "#357";
  g.lineWidth = 0.7;
  for (const el of mesh.elements) {
    g.beginPath();
    g.moveTo(px(el[0]), py(el[0]));
    for (const v of el.slice(1)) g.lineTo(px(v), py(v));
    g.closePath();
    g.stroke();
  }
  for (let i = 0; i < xs.length && y1 === y0; i++) g.fillRect(px(i) - 1.5, py(i) - 1.5, 3, 3);
}

function runBounds() {
  const out = $("bounds-out");
  const spec = {
    mesh: meshSpec(),
    order: num("order"),
    policy: $("policy").value,
    diffusion: { kind: "rotated_anisotropic", angle: num("angle"), eigenvalues: [1, num("ratio")] },
  };
  try {
    const { report: r, mesh } = JSON.parse(bound_report(JSON.stringify(spec)));
    table(out, [
      ["free DOFs", r.n_dofs],
      ["κ(M̃_K̂)", r.kappa_surrogate],
      ["lower (diagonal ratio)", r.lower_diag_ratio],
      ["λ_max exact", r.lambda_max_exact],
      ["upper (diagonal ratio)", r.upper_diag_ratio],
      ["upper (geometric)", r.upper_geometric],
      ["upper (Zhu–Du)", r.upper_zhudu],
      ["Euler τ from geometric", 2 / r.upper_geometric],
      ["sandwich holds", r.sandwich_satisfied],
    ]);
    drawMesh(mesh);
  } catch (e) {
    fail(out, e);
    drawMesh(null);
  }
}

function axes(g, c, pad) {
  g.strokeStyle = "#888";
  g.beginPath();
  g.moveTo(pad, 5);
  g.lineTo(pad, c.height - pad);
  g.lineTo(c.width - 5, c.height - pad);
  g.stroke();
}

function runProfile() {
  const out = $("profile-out");
  try {
    const p = JSON.parse(stability_profile($("scheme").value, 3.2, 321));
    out.textContent = `real stability boundary ${p.boundary.toFixed(10)}`;
    const c = $("profile-canvas");
    const g = c.getContext("2d");
    const pad = 30;
    const yMax = 1.5;
    const X = (x) => pad + (x / 3.2) * (c.width - pad - 5);
    const Y = (y) => c.height - pad - (Math.min(y, yMax) / yMax) * (c.height - pad - 5);
    g.clearRect(0, 0, c.width, c.height);
    axes(g, c, pad);
    g.setLineDash([4, 4]);
    g.strokeStyle = "#aaa";
    g.beginPath();
    g.moveTo(X(0), Y(1));
    g.lineTo(X(3.2), Y(1));
    g.moveTo(X(p.boundary), Y(0));
    g.lineTo(X(p.boundary), Y(yMax));
    g.stroke();
    g.setLineDash([]);
    g.strokeStyle = "#c40";
    g.beginPath();
    p.x.forEach((x, i) => (i ? g.lineTo(X(x), Y(p.abs_r[i])) : g.moveTo(X(x), Y(p.abs_r[i]))));
    g.stroke();
    g.fillStyle = "#444";
    g.fillText("x", c.width - 15, c.height - pad + 15);
    g.fillText("1", 12, Y(1) + 4);
  } catch (e) {
    fail(out, e);
  }
}

function runGap() {
  const out = $("gap-out");
  try {
    const rows = JSON.parse(anisotropy_gap(num("gap-n"), 1, num("gap-a"), 9));
    const last = rows[rows.length - 1];
    out.textContent = `at a = ${fmt(last.a)}: Zhu–Du / geometric = ${fmt(last.zhudu / last.geometric)}`;
    const c = $("gap-canvas");
    const g = c.getContext("2d");
    const pad = 30;
    const vals = rows.flatMap((r) => [r.zhudu, r.geometric, r.exact].filter((v) => v > 0)).map(Math.log10);
    const [lo, hi] = [Math.min(...vals), Math.max(...vals) + 1e-9];
    const la = Math.log10(last.a) || 1;
    const X = (a) => pad + (Math.log10(a) / la) * (c.width - pad - 80);
    const Y = (v) => c.height - pad - ((Math.log10(v) - lo) / (hi - lo)) * (c.height - pad - 10);
    g.clearRect(0, 0, c.width, c.height);
    axes(g, c, pad);
    const series = [["zhudu", "#c40"], ["geometric", "#357"], ["exact", "#393"]];
    for (const [key, color] of series) {
      const pts = rows.filter((r) => r[key] > 0);
      if (!pts.length) continue;
      g.strokeStyle = color;
      g.beginPath();
      pts.forEach((r, i) => (i ? g.lineTo(X(r.a), Y(r[key])) : g.moveTo(X(r.a), Y(r[key]))));
      g.stroke();
      const end = pts[pts.length - 1];
      g.fillStyle = color;
      g.fillText(key, X(end.a) + 5, Y(end[key]) + 4);
    }
    g.fillStyle = "#444";
    g.fillText("log a", c.width - 70, c.height - pad + 15);
  } catch (e) {
    fail(out, e);
  }
}

await init();
$("run-bounds").onclick = runBounds;
$("run-profile").onclick = runProfile;
$("run-gap").onclick = runGap;
runBounds();
runProfile();
