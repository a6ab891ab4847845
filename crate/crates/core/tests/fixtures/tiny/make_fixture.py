# Regenerates the tiny fixture and its numpy oracle values: python3 make_fixture.py
import struct, json, numpy as np
def mat(path, a):
    a = np.asarray(a, dtype='<f8')
    with open(path, 'wb') as f:
        f.write(b'MAT1' + struct.pack('<II', *a.shape) + a.tobytes())
A1 = np.array([[0.5, -1.0, 0.25], [1.5, 0.5, -0.5], [-0.75, 1.0, 1.0], [0.25, 0.25, 2.0]])
A2 = np.array([[1.0, -0.5, 0.75, 0.5], [-1.25, 1.0, 0.5, -0.25]])
X = np.array([[1, 0, 0.5], [0.25, 1, -1], [-0.5, 0.5, 1], [2, -1, 0], [0, 0, 1], [1, 1, 1]], float)
y = [1, 2, 2, 1, 2, 1]
mat('layer1.mat', A1); mat('layer2.mat', A2); mat('x.mat', X)
with open('y.lbl', 'wb') as f:
    f.write(b'LBL1' + struct.pack('<II', len(y), 2) + struct.pack('<%dI' % len(y), *y))
json.dump({"layers": [{"weight": "layer1.mat", "nonlinearity": {"kind": "relu"}},
                      {"weight": "layer2.mat", "nonlinearity": {"kind": "identity"}}]},
          open('manifest.json', 'w'), indent=2)

# Independent evaluation of every report field.
gamma, delta = 0.5, 0.01
out = np.maximum(X @ A1.T, 0) @ A2.T
n, L, W = len(y), 2, 4
marg = np.array([o[t-1] - max(o[j] for j in range(2) if j != t-1) for o, t in zip(out, y)])
ramp = np.mean(np.where(marg < 0, 1.0, np.where(marg <= gamma, 1 - marg / gamma, 0.0)))
s = [np.linalg.norm(A, 2) for A in (A1, A2)]
b = [np.linalg.norm(A, axis=1).sum() for A in (A1, A2)]
fro = [np.linalg.norm(A) for A in (A1, A2)]
RA = np.prod(s) * sum((bi / si) ** (2 / 3) for bi, si in zip(b, s)) ** 1.5
RPB = np.prod(s) * L * np.sqrt(sum(W * f * f / (si * si) for f, si in zip(fro, s)))
B = np.sqrt((X ** 2).sum())
cplx = 72 * B * np.log(2 * W) * np.log(n) / (gamma * n) * RA
conf = 3 * np.sqrt(np.log(1 / delta) / (2 * n))
total = ramp + 8 / n + cplx + conf
inner = sum(((1 / L + b[i]) * np.prod([1 / L + s[j] for j in range(L) if j != i])) ** (2 / 3) for i in range(L)) ** 1.5
ucplx = 144 * np.log(n) * np.log(2 * W) / (gamma * n) * (1 + B) * inner
uconf = np.sqrt(9 / (2 * n)) * np.sqrt(np.log(1 / delta) + np.log(2 * n / gamma) + 2 * np.log(2 + B)
                                     + 2 * sum(np.log(2 + L * v) for v in b) + 2 * sum(np.log(2 + L * v) for v in s))
err = np.mean([np.argmax(o) != t - 1 for o, t in zip(out, y)])
json.dump(dict(s=s, b=b, R_A=RA, R_PB=RPB, B=B, ramp=ramp, cplx=cplx, conf=conf, total=total,
               utotal=ramp + 8 / n + ucplx + uconf, err=err, margins=list(marg),
               normalized=list(marg / (RA * B / n))), open('oracle.json', 'w'), indent=1)
