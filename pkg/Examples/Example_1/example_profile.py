import numpy as np
from instantonpy.connections import basic_connection, dilate
from instantonpy.energy import ym_alpha, basic_alpha_energy
from instantonpy.dilation import profile, pullback_energy

## energy of dilated basic connections against the minimum
alpha = 1.3
for lam in [1.0, 2.0, 5.0, 20.0]:
    E = ym_alpha(dilate(basic_connection(), lam), alpha).value
    print(lam, E, pullback_energy(alpha, lam), E - basic_alpha_energy(alpha))

## profile table, plot it with whatever you like
P = profile([1.1, 1.5, 2.0], np.geomspace(1, 100, 25))
P.to_csv("profile.csv", index=False)
print(P.head())
