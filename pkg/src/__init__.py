# MHD boundary-layer simulator - source package
