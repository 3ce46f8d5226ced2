import numpy as np
D,H,Lay,T=2,3,2,4
def plen(din): return 4*H*(din+H)+4*H
n = plen(D)+plen(H)*(Lay-1)+H+1
p = 0.3*np.sin(np.arange(1,n+1))
x = np.cos(0.7*np.arange(8)).reshape(T,D)
sig=lambda z:1/(1+np.exp(-z))
off=0; inp=x
for l in range(Lay):
    din = D if l==0 else H
    W = p[off:off+4*H*(din+H)].reshape(4*H,din+H); off+=4*H*(din+H)
    b = p[off:off+4*H]; off+=4*H
    h=np.zeros(H); c=np.zeros(H); outs=[]
    for t in range(T):
        z = W@np.concatenate([inp[t],h])+b
        i,f,g,o = sig(z[:H]),sig(z[H:2*H]),np.tanh(z[2*H:3*H]),sig(z[3*H:])
        c=f*c+i*g; h=o*np.tanh(c); outs.append(h)
    inp=np.array(outs)
y = p[off:off+H]@inp[-1]+p[off+H]
print(repr(float(y)))
