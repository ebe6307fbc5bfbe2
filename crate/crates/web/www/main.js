import init, { two_state_curves, random_ratio_curves, response_curves } from "./pkg/corrbound_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
const POINTS = 300;

function values(fieldset) {
  const out = {};
  for (const el of fieldset.querySelectorAll("input, select")) {
    out[el.name] = el.type === "number" ? Number(el.value) : el.value;
  }
  return out;
}

function plot(canvas, curves, opts = {}) {
  const ctx = canvas.getContext("2d");
  const { width, height } = canvas;
  const pad = 44;
  ctx.clearRect(0, 0, width, height);

  const t = curves.t;
  const ys = curves.series.flatMap((s) => s.y).filter((v) => v !== null && Number.isFinite(v));
  let lo = Math.min(0, ...ys);
  let hi = Math.max(...ys, opts.yMin ?? -Infinity);
  if (hi === lo) hi = lo + 1;
  const x = (v) => pad + ((v - t[0]) / (t[t.length - 1] - t[0])) * (width - 2 * pad);
  const y = (v) => height - pad - ((v - lo) / (hi - lo)) * (height - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.lineWidth = 1;
  ctx.strokeRect(pad, pad, width - 2 * pad, height - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.fillText(hi.toPrecision(3), 2, pad + 4);
  ctx.fillText(lo.toPrecision(3), 2, height - pad);
  ctx.fillText(String(t[0].toPrecision(3)), pad, height - pad + 16);
  ctx.fillText(String(t[t.length - 1].toPrecision(3)), width - pad - 20, height - pad + 16);
  ctx.fillText("t", width / 2, height - 8);

  if (opts.guide !== undefined) {
    ctx.setLineDash([6, 4]);
    ctx.beginPath();
    ctx.moveTo(pad, y(opts.guide));
    ctx.lineTo(width - pad, y(opts.guide));
    ctx.stroke();
    ctx.setLineDash([]);
  }
  if (curves.domain_edge !== null && curves.domain_edge !== undefined) {
    ctx.strokeStyle = "#bbb";
    ctx.setLineDash([2, 3]);
    ctx.beginPath();
    ctx.moveTo(x(curves.domain_edge), pad);
    ctx.lineTo(x(curves.domain_edge), height - pad);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  curves.series.forEach((s, k) => {
    ctx.strokeStyle = opts.mono ? "rgba(31,119,180,0.35)" : COLORS[k % COLORS.length];
    ctx.lineWidth = opts.mono ? 1 : 2;
    ctx.beginPath();
    let pen = false;
    s.y.forEach((v, i) => {
      if (v === null || !Number.isFinite(v)) {
        pen = false;
        return;
      }
      if (pen) ctx.lineTo(x(t[i]), y(v));
      else ctx.moveTo(x(t[i]), y(v));
      pen = true;
    });
    ctx.stroke();
  });
}

function legend(el, curves) {
  el.innerHTML = curves.series
    .map((s, k) => `<span style="color:${COLORS[k % COLORS.length]}">&#9644; ${s.label}</span>`)
    .join("");
}

function guarded(canvas, legendEl, f) {
  return () => {
    try {
      const curves = JSON.parse(f());
      if (legendEl) legend(legendEl, curves);
      return curves;
    } catch (e) {
      const ctx = canvas.getContext("2d");
      ctx.clearRect(0, 0, canvas.width, canvas.height);
      if (legendEl) legendEl.innerHTML = `<span class="error">${e}</span>`;
      return null;
    }
  };
}

function wire(id, draw) {
  const fs = document.getElementById(id);
  fs.addEventListener("input", draw);
  draw();
}

await init();

const twoCanvas = document.getElementById("two-state-plot");
const twoLegend = document.getElementById("two-state-legend");
wire("two-state", () => {
  const v = values(document.getElementById("two-state"));
  const c = guarded(twoCanvas, twoLegend, () => two_state_curves(v.w12, v.w21, v.p2, v.tmax, POINTS))();
  if (c) plot(twoCanvas, c);
});

const randCanvas = document.getElementById("random-plot");
wire("random", () => {
  const v = values(document.getElementById("random"));
  const c = guarded(randCanvas, null, () =>
    random_ratio_curves(v.models, BigInt(Math.max(0, Math.floor(v.seed))), v.tmax, 120))();
  if (c) plot(randCanvas, c, { mono: true, guide: 1, yMin: 1.05 });
});

const respCanvas = document.getElementById("response-plot");
const respLegend = document.getElementById("response-legend");
wire("response", () => {
  const v = values(document.getElementById("response"));
  const c = guarded(respCanvas, respLegend, () =>
    response_curves(v.w12, v.w21, v.chi, v.kind === "step", v.tmax, POINTS))();
  if (c) plot(respCanvas, c);
});
