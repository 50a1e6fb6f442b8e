import init, { field_map, altitude_profile, rsrq_coverage } from "./pkg/skylog_web.js";

const $ = (id) => document.getElementById(id);

function guard(fn) {
  return () => {
    try {
      $("error").textContent = "";
      fn();
    } catch (e) {
      $("error").textContent = String(e);
    }
  };
}

// blue (low) to red (high)
function color(t) {
  const h = 240 * (1 - Math.min(1, Math.max(0, t)));
  return `hsl(${h}, 80%, 50%)`;
}

function axes(ctx, w, h, pad) {
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
}

function drawMap() {
  const alt = Number($("map-alt").value);
  $("map-alt-v").textContent = alt;
  const n = 60;
  const d = JSON.parse(field_map(Number($("map-seed").value), alt, $("map-metric").value, n));
  const vals = d.values.filter((v) => v !== null);
  const lo = Math.min(...vals);
  const hi = Math.max(...vals);
  const cv = $("map");
  const ctx = cv.getContext("2d");
  const cell = cv.width / n;
  ctx.clearRect(0, 0, cv.width, cv.height);
  d.values.forEach((v, i) => {
    ctx.fillStyle = v === null ? "#eee" : color((v - lo) / (hi - lo || 1));
    ctx.fillRect((i % n) * cell, Math.floor(i / n) * cell, cell + 0.5, cell + 0.5);
  });
  const [e0, e1] = d.extent_east_m;
  const [n0, n1] = d.extent_north_m;
  ctx.fillStyle = "#000";
  ctx.font = "12px system-ui";
  for (const s of d.stations) {
    const x = ((s.east_m - e0) / (e1 - e0)) * cv.width;
    const y = ((n1 - s.north_m) / (n1 - n0)) * cv.height;
    ctx.beginPath();
    ctx.arc(x, y, 5, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillText(`pci ${s.pci}`, x + 7, y - 7);
  }
  const cx = ((0 - e0) / (e1 - e0)) * cv.width;
  const cy = ((n1 - 0) / (n1 - n0)) * cv.height;
  ctx.strokeStyle = "#000";
  ctx.strokeRect(cx - 4, cy - 4, 8, 8);
  $("map-range").textContent = `${d.metric}: ${lo.toFixed(1)} (blue) to ${hi.toFixed(1)} (red). Square marks the climb point.`;
}

function drawProfile() {
  const d = JSON.parse(
    altitude_profile(Number($("prof-seed").value), Number($("prof-seeds").value), $("prof-metric").value),
  );
  const cv = $("profile");
  const ctx = cv.getContext("2d");
  const pad = 40;
  ctx.clearRect(0, 0, cv.width, cv.height);
  axes(ctx, cv.width, cv.height, pad);
  const lo = Math.min(...d.bins.map((b) => b.min));
  const hi = Math.max(...d.bins.map((b) => b.max));
  const x = (alt) => pad + (alt / 130) * (cv.width - 2 * pad);
  const y = (v) => cv.height - pad - ((v - lo) / (hi - lo || 1)) * (cv.height - 2 * pad);
  ctx.strokeStyle = "#bbb";
  for (const b of d.bins) {
    ctx.beginPath();
    ctx.moveTo(x(b.lower + 5), y(b.min));
    ctx.lineTo(x(b.lower + 5), y(b.max));
    ctx.stroke();
  }
  ctx.strokeStyle = "#c33";
  ctx.beginPath();
  d.bins.forEach((b, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, x(b.lower + 5), y(b.mean)));
  ctx.stroke();
  ctx.fillStyle = "#333";
  ctx.fillText(`${hi.toFixed(0)}`, 4, pad);
  ctx.fillText(`${lo.toFixed(0)}`, 4, cv.height - pad);
  ctx.fillText("altitude AGL (m) →", cv.width - 150, cv.height - 10);
  const rho = d.spearman_rho === null ? "n/a" : d.spearman_rho.toFixed(3);
  $("prof-rho").textContent = `${d.metric}: bin means (red) with min/max whiskers. Spearman rho vs altitude = ${rho}.`;
}

function drawEcdf() {
  const th = Number($("cov-th").value);
  $("cov-th-v").textContent = th;
  const d = JSON.parse(rsrq_coverage(Number($("cov-seed").value), th));
  const cv = $("ecdf");
  const ctx = cv.getContext("2d");
  const pad = 40;
  ctx.clearRect(0, 0, cv.width, cv.height);
  axes(ctx, cv.width, cv.height, pad);
  const x = (v) => pad + ((v + 24) / 21) * (cv.width - 2 * pad);
  const y = (f) => cv.height - pad - f * (cv.height - 2 * pad);
  ctx.strokeStyle = "#36c";
  ctx.beginPath();
  ctx.moveTo(x(-24), y(0));
  let prev = 0;
  for (const p of d.ecdf) {
    ctx.lineTo(x(p.x), y(prev));
    ctx.lineTo(x(p.x), y(p.f));
    prev = p.f;
  }
  ctx.lineTo(x(-3), y(1));
  ctx.stroke();
  ctx.strokeStyle = "#c33";
  ctx.beginPath();
  ctx.moveTo(x(th), y(0));
  ctx.lineTo(x(th), y(1));
  ctx.stroke();
  ctx.fillStyle = "#333";
  ctx.fillText("-24 dB", pad - 10, cv.height - 20);
  ctx.fillText("-3 dB", cv.width - pad - 20, cv.height - 20);
  const pct = (100 * d.frac_rsrq_poor).toFixed(1);
  $("cov-frac").textContent = `${pct}% of ${d.n} samples have RSRQ below ${th} dB.`;
}

await init();
for (const id of ["map-seed", "map-alt", "map-metric"]) $(id).addEventListener("input", guard(drawMap));
for (const id of ["prof-seed", "prof-seeds", "prof-metric"]) $(id).addEventListener("input", guard(drawProfile));
for (const id of ["cov-seed", "cov-th"]) $(id).addEventListener("input", guard(drawEcdf));
guard(drawMap)();
guard(drawProfile)();
guard(drawEcdf)();
